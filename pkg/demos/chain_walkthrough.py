"""Two-node chain: every closed form next to its brute-force counterpart."""

from edgemod import oracle
from edgemod.graph_model import EdgeMod, build_network
from edgemod.stable import (build_kernel, delta_h2_lower_bound, delta_hinf,
                            delta_realization, stability_margin)


def main():
    # edge 0 -> 1 of weight 0.5; we probe the missing back edge 1 -> 0
    net = build_network(2, [(0, 1, 0.5)], inputs=[0], outputs=[1])
    k = build_kernel(net)
    print("resolvent (I - A)^-1:\n", k.resolvent)

    m = stability_margin(k, 1, 0)
    print(f"margin of (1, 0): {m:g}")
    for frac in (0.99, 1.01):
        r = oracle.rebuild_and_measure(net, EdgeMod(1, 0, frac * m), norms=False)
        print(f"  w = {frac:.2f} x margin -> rho = {r.spectral_radius:.6f}")

    mod = EdgeMod(1, 0, 1.0)
    delta = delta_realization(net, mod)
    print(f"H-inf closed form {delta_hinf(k, mod):.12g}, "
          f"sweep {oracle.hinf_sweep(delta).value:.12g}")
    h2 = oracle.h2_truncated(delta)
    print(f"H2^2 lower bound {delta_h2_lower_bound(k, mod):.12g}, "
          f"truncated sum {h2.value:.12g} (tail <= {h2.tail_bound:.1e})")
    print("impulse response:", delta.impulse_response(8)[:, 0, 0])


if __name__ == "__main__":
    main()
