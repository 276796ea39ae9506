import pygfc
from pygfc.analysis import exact_tail, overlap_bound, tail_asymptote

if __name__ == '__main__':
    # Two-mode reference kernel
    #   C(x,y) = 1 + 0.5 exp(2 pi i (x - y))
    kernel = pygfc.make_kernel(
        {"family": "mercer-synthetic", "mercer_eigs": [1.0, 0.5]}
    )

    # Eigendecomposition on 64 Gauss-Legendre nodes
    decomp = pygfc.decompose(kernel, pygfc.build_grid(64))
    spectrum = pygfc.SpectrumSummary.from_decomposition(decomp)
    print("Spectrum", spectrum, "Z =", spectrum.Z)

    # Condition on ||phi||^2 > r for a few thresholds.
    # Rejection is fine while the event is not rare,
    # the decomposition sampler handles the deep tail.
    for r in (2.0, 5.0, 10.0, 15.0):
        if r < 8:
            ens = pygfc.sample_conditional_rejection(decomp, r, 10_000, seed=42)
        else:
            ens = pygfc.sample_conditional_decomposition(decomp, r, 10_000, seed=42)

        p = ens.p_event
        print(
            f"r={r:>4}: P={p.value:.4e} +/- {p.se:.1e} "
            f"(exact {exact_tail(r, spectrum):.4e}, "
            f"asymptote {tail_asymptote(r, spectrum):.4e}) by {ens.method}"
        )
        bound = overlap_bound(r, 0.3, spectrum)
        print(f"        overlap bound at eps=0.3: {bound.value:.4f}")
