//! Acceptance suite: one test per criterion. Each test prints a pass/fail
//! line per clause with the measured values, then fails if any clause is
//! unmet. Run with `cargo test -p evlm-cli --test acceptance -- --nocapture`
//! to see the clause-level detail.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use evlm_cli::commands::{cmd_analyze, AnalyzeArgs, OutputFormat};
use evlm_cli::dataset::{load_csv, ModelInputs, TestSpec};
use evlm_core::{
    classify, compare, critical_delta, delta_sic_from_f, design_thresholds, f_from_delta_sic, fit,
    kl_nested, misleading_probs, noncentrality, parametric_bootstrap, post_data_p,
    sample_size_curve, stratified_bootstrap, summarize, trichotomy_probs, BootstrapMethod,
    ComparisonSpec, DesignMatrix, EffectSpec, EvidenceVerdict, FavoredModel, NcfParams,
    ResponseVector,
};

fn citrus_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../citrus.csv")
}

fn load_citrus() -> ModelInputs {
    load_csv(
        &citrus_path(),
        "yield",
        &["variety".into(), "pesticide".into()],
        &[],
        &TestSpec::Interaction,
    )
    .expect("citrus fixture loads")
}

/// Collects clause outcomes and prints one line per clause.
struct Clauses {
    failures: Vec<String>,
}

impl Clauses {
    fn new() -> Self {
        Clauses { failures: Vec::new() }
    }

    fn check(&mut self, name: &str, pass: bool, detail: String) {
        println!("  [{}] {name}: {detail}", if pass { "pass" } else { "FAIL" });
        if !pass {
            self.failures.push(format!("{name}: {detail}"));
        }
    }

    fn within(&mut self, name: &str, value: f64, target: f64, tol: f64) {
        self.check(
            name,
            (value - target).abs() <= tol,
            format!("{value} vs {target} +- {tol}"),
        );
    }

    fn finish(self, criterion: &str) {
        assert!(
            self.failures.is_empty(),
            "{criterion}: unmet clauses:\n{}",
            self.failures.join("\n")
        );
    }
}

#[test]
fn criterion_1_worked_example_golden_block() {
    let mut c = Clauses::new();
    // Drive the real analyze command and read its full-precision outputs.
    let dir = tempfile::tempdir().unwrap();
    let report = cmd_analyze(&AnalyzeArgs {
        data: citrus_path(),
        response: "yield".into(),
        factors: vec!["variety".into(), "pesticide".into()],
        covariates: vec![],
        test: TestSpec::Interaction,
        deltas: vec![0.5, 1.0],
        delta_defaulted: false,
        gamma1: 0.05,
        gamma2: 0.05,
        format: OutputFormat::Table,
        out: Some(dir.path().to_path_buf()),
    })
    .expect("analyze runs");
    assert!(report.contains("n = 24, r = 12, q = 6"));

    let analysis = read_kv_csv(&dir.path().join("analysis.csv"));
    let f = analysis["f"];
    let p = analysis["p"];
    let dsic = analysis["delta_sic"];
    c.within("f", f, 1.80, 0.01);
    c.within("p", p, 0.18, 0.005);
    c.within("delta_sic", dsic, -3.66, 0.01);

    let rows = read_rows_csv(&dir.path().join("thresholds.csv"));
    let half = &rows[0];
    c.within("delta=0.5 lambda", half[1], 6.0, 1e-9);
    c.within("delta=0.5 psi1", half[2], 0.584, 0.002);
    c.within("delta=0.5 psi2", half[3], 5.69, 0.01);
    c.within("delta=0.5 k1", half[4], -12.9, 0.05);
    c.within("delta=0.5 k2", half[5], 13.3, 0.05);
    c.within("delta=0.5 P2", half[6], 0.45, 0.005);
    let one = &rows[1];
    c.within("delta=1 lambda", one[1], 24.0, 1e-9);
    c.within("delta=1 psi1", one[2], 2.05, 0.01);
    c.within("delta=1 psi2", one[3], 12.9, 0.05);
    c.within("delta=1 k1", one[4], -2.16, 0.02);
    c.within("delta=1 k2", one[5], 29.2, 0.1);
    c.within("delta=1 P2", one[6], 0.03, 0.005);

    // Verdicts via the library on the same inputs.
    let half_design = design_thresholds(24, &EffectSpec::new(0.5, 6, 12).unwrap(), 0.05, 0.05)
        .unwrap();
    let one_design = design_thresholds(24, &EffectSpec::new(1.0, 6, 12).unwrap(), 0.05, 0.05)
        .unwrap();
    c.check(
        "delta=0.5 verdict inconclusive",
        classify(dsic, &half_design) == EvidenceVerdict::Inconclusive,
        format!("{}", classify(dsic, &half_design)),
    );
    c.check(
        "delta=1 verdict strong model 1",
        classify(dsic, &one_design) == EvidenceVerdict::StrongModel1,
        format!("{}", classify(dsic, &one_design)),
    );

    let dstar = critical_delta(dsic, 24, 6, 12, 0.05, 10.0).unwrap();
    c.within("critical delta*", dstar, 0.94, 0.01);
    c.finish("criterion 1");
}

#[test]
fn criterion_2_noncentrality_convention() {
    let mut c = Clauses::new();
    let m1 = NcfParams::new(1, 3, 2.0).unwrap().mean().unwrap();
    let m2 = NcfParams::new(1, 3, 4.0).unwrap().mean().unwrap();
    c.check("mean(1,3,2) = 9 exactly", m1 == 9.0, format!("{m1}"));
    c.check("mean(1,3,4) = 15 exactly", m2 == 15.0, format!("{m2}"));

    // Sampler quantile discrimination: the empirical median of draws must
    // match this parameterization's median and rule out the halved one.
    let p = NcfParams::new(1, 3, 2.0).unwrap();
    let mut draws = p
        .sample(&mut ChaCha8Rng::seed_from_u64(2024), 400_000)
        .unwrap();
    draws.sort_by(|a, b| a.total_cmp(b));
    let med = 0.5 * (draws[199_999] + draws[200_000]);
    let own = p.quantile(0.5).unwrap();
    let halved = NcfParams::new(1, 3, 1.0).unwrap().quantile(0.5).unwrap();
    c.check(
        "sampler median matches lambda convention",
        (med - own).abs() < 0.02,
        format!("empirical {med} vs {own}"),
    );
    c.check(
        "sampler median rules out lambda/2 convention",
        (med - halved).abs() > 10.0 * (med - own).abs().max(0.02),
        format!("empirical {med} vs halved-convention {halved}"),
    );
    c.finish("criterion 2");
}

#[test]
fn criterion_3_design_cdf_monotone_in_sample_size() {
    let mut c = Clauses::new();
    let u = 2.0;
    let mut prev = f64::INFINITY;
    for &n in &[24usize, 36, 48, 60] {
        let cdf = NcfParams::new(6, n - 12, 0.25 * n as f64)
            .unwrap()
            .cdf(u)
            .unwrap();
        c.check(
            &format!("cdf at u = 2 decreases for n = {n}"),
            cdf < prev,
            format!("{cdf}"),
        );
        prev = cdf;
    }
    // The lambda = 0 member is the central F distribution.
    let central = NcfParams::new(6, 12, 0.0).unwrap();
    let mut max_err: f64 = 0.0;
    for i in 1..=40 {
        let u = 0.2 * i as f64;
        let x = 6.0 * u / (6.0 * u + 12.0);
        let exact = evlm_core::special::reg_inc_beta(3.0, 6.0, x);
        max_err = max_err.max((central.cdf(u).unwrap() - exact).abs());
    }
    c.check(
        "lambda = 0 curve equals central F",
        max_err < 1e-12,
        format!("max |cdf - central| = {max_err:e}"),
    );
    c.finish("criterion 3");
}

// Known red: the stratified-aR band is not attainable. For two-observation
// cells the stratified scheme's resampling distribution is finite (three
// outcomes per cell, 3^12 configurations for this layout); complete
// enumeration gives aR = 0.556444 exactly on the bundled data, below the
// pinned [0.57, 0.67] band. The band is kept rather than loosened; every
// other clause passes. The parametric clauses double as a cross-check: the
// exact parametric aR is 0.5873 (analytic), inside its band.
#[test]
fn criterion_4_bootstrap_stochastic_reproduction() {
    let mut c = Clauses::new();
    let ModelInputs { design, response, layout, spec } = load_citrus();
    let fitted = fit(&design, &response).unwrap();
    let seeds: Vec<u64> = (1..=7).collect();
    let n_boot = 1024;

    struct Band {
        name: &'static str,
        lo: f64,
        hi: f64,
        values: Vec<f64>,
    }
    let mut bands = vec![
        Band { name: "parametric aR", lo: 0.56, hi: 0.66, values: vec![] },
        Band { name: "parametric mean", lo: 2.0, hi: 3.4, values: vec![] },
        Band { name: "parametric q05", lo: -13.0, hi: -7.0, values: vec![] },
        Band { name: "parametric q95", lo: 17.0, hi: 23.0, values: vec![] },
        Band { name: "stratified aR", lo: 0.57, hi: 0.67, values: vec![] },
        Band { name: "stratified mean", lo: 2.7, hi: 4.3, values: vec![] },
        Band { name: "stratified q05", lo: -13.0, hi: -7.0, values: vec![] },
        Band { name: "stratified q95", lo: 17.0, hi: 23.0, values: vec![] },
    ];
    for &seed in &seeds {
        let par = summarize(
            &parametric_bootstrap(&fitted, &design, &spec, n_boot, seed).unwrap(),
            0.90,
        )
        .unwrap();
        let strat = summarize(
            &stratified_bootstrap(&response, &layout, &design, &spec, n_boot, seed).unwrap(),
            0.90,
        )
        .unwrap();
        for (offset, s) in [(0, &par), (4, &strat)] {
            bands[offset].values.push(s.a_r);
            bands[offset + 1].values.push(s.mean);
            bands[offset + 2].values.push(s.quantile(0.05));
            bands[offset + 3].values.push(s.quantile(0.95));
        }
    }
    for band in &bands {
        let passing = band
            .values
            .iter()
            .filter(|&&v| v >= band.lo && v <= band.hi)
            .count();
        let values: Vec<String> = band.values.iter().map(|v| format!("{v:.3}")).collect();
        c.check(
            &format!("{} in [{}, {}] for a majority of seeds", band.name, band.lo, band.hi),
            passing * 2 > seeds.len(),
            format!("{passing}/{} seeds pass: {}", seeds.len(), values.join(", ")),
        );
    }
    c.finish("criterion 4");
}

// Known red at cell size 2: refitting each simulated dataset inflates the
// fitted noncentrality by about q sigma^2 (a 55% relative bias at n = 24),
// which pushes the averaged bootstrap median above the generator's
// per-observation divergence and fattens the stratified scheme's upper tail
// (width ratio ~1.45 across seeds and replicate counts against the pinned
// 1.05-1.40). Both effects shrink with cell size; the >= 4 clauses pass.
#[test]
fn criterion_5_cell_size_study() {
    let mut c = Clauses::new();
    let ModelInputs { design, response, layout, spec } = load_citrus();
    let fitted = fit(&design, &response).unwrap();
    let rows = sample_size_curve(
        &design, &spec, &fitted, &layout, &[2, 4, 8], 128, 256, 1, 5_000_000,
    )
    .unwrap();
    let find = |cs: usize, m: BootstrapMethod| {
        rows.iter()
            .find(|r| r.cell_size == cs && r.method == m)
            .unwrap()
    };
    for &cs in &[2usize, 4, 8] {
        let par = find(cs, BootstrapMethod::Parametric);
        let strat = find(cs, BootstrapMethod::Stratified);
        let ratio = (strat.ci95 - strat.ci05) / (par.ci95 - par.ci05);
        if cs == 2 {
            c.check(
                "cell size 2: stratified interval 5-40% wider than parametric",
                (1.05..=1.40).contains(&ratio),
                format!("width ratio = {ratio:.3}"),
            );
        } else {
            c.check(
                &format!("cell size {cs}: intervals agree within 5%"),
                (ratio - 1.0).abs() <= 0.05,
                format!("width ratio = {ratio:.3}"),
            );
        }
        for row in [par, strat] {
            c.check(
                &format!("cell size {cs} {} median below pseudo-true", row.method),
                row.ci50 < row.pseudo_true,
                format!("median = {:.4}, pseudo-true = {:.4}", row.ci50, row.pseudo_true),
            );
        }
    }
    c.finish("criterion 5");
}

#[test]
fn criterion_6_property_suites() {
    let mut c = Clauses::new();

    // (a) Three algebraically equivalent F-statistic routes agree to 1e-8
    // on 50 randomized nested problems.
    let mut rng = ChaCha8Rng::seed_from_u64(60_001);
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let n = 20 + (trial % 5) * 7;
        let r = 4 + trial % 4;
        let q = 1 + trial % (r - 1);
        let (x, beta) = random_design(&mut rng, n, r);
        let noise =
            DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let y = ResponseVector::new(x.entries() * beta + noise).unwrap();
        let drop: Vec<usize> = (r - q..r).collect();
        let spec_a = ComparisonSpec::drop_columns(drop.clone());
        let mut l = DMatrix::zeros(q, r);
        for (row, &col) in drop.iter().enumerate() {
            l[(row, col)] = 1.0;
        }
        let spec_b = ComparisonSpec::contrast(l, DVector::zeros(q));
        let ra = compare(&x, &y, &spec_a).unwrap();
        let rb = compare(&x, &y, &spec_b).unwrap();
        let f_var = (ra.n - ra.r) as f64 / ra.q as f64
            * (ra.fit_restricted.sigma2_ml - ra.fit_full.sigma2_ml)
            / ra.fit_full.sigma2_ml;
        worst = worst
            .max(((ra.f_stat - rb.f_stat) / ra.f_stat.max(1.0)).abs())
            .max(((ra.f_stat - f_var) / ra.f_stat.max(1.0)).abs());
    }
    c.check(
        "F-statistic routes agree on 50 random problems",
        worst < 1e-8,
        format!("worst relative gap = {worst:e}"),
    );

    // (b) Noncentrality equals twice the nested KL divergence minus the
    // design-load quadratic form, to 1e-8.
    let ModelInputs { design, spec, .. } = load_citrus();
    let mut worst_b: f64 = 0.0;
    for _ in 0..20 {
        let beta2 =
            DVector::from_iterator(6, (0..6).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let sigma2 = 0.5 + rng.random::<f64>() * 3.0;
        let mut beta = DVector::zeros(12);
        for (k, i) in (6..12).enumerate() {
            beta[i] = beta2[k];
        }
        let lam = noncentrality(&design, &spec, &beta, sigma2).unwrap();
        let kl = kl_nested(&design, &spec, &beta2, sigma2).unwrap();
        let kept: Vec<usize> = (0..6).collect();
        let x1 = design.entries().select_columns(&kept);
        let x2 = design.entries().select_columns(&[6usize, 7, 8, 9, 10, 11]);
        let x2b = &x2 * &beta2;
        let cross = x1.tr_mul(&x2b);
        let load = cross.dot(&x1.tr_mul(&x1).cholesky().unwrap().solve(&cross)) / sigma2;
        worst_b = worst_b.max(((lam - (2.0 * kl - load)) / lam.max(1.0)).abs());
    }
    c.check(
        "noncentrality = 2 KL - design load",
        worst_b < 1e-8,
        format!("worst relative gap = {worst_b:e}"),
    );

    // (c) cdf/quantile round trip to 1e-9 in probability.
    let mut worst_c: f64 = 0.0;
    for &(nu1, nu2, lam) in &[(6usize, 12usize, 6.0), (6, 12, 24.0), (1, 3, 2.0), (3, 48, 12.0)] {
        let p = NcfParams::new(nu1, nu2, lam).unwrap();
        for &prob in &[0.01, 0.05, 0.5, 0.95, 0.99] {
            let u = p.quantile(prob).unwrap();
            worst_c = worst_c.max((p.cdf(u).unwrap() - prob).abs());
        }
    }
    c.check(
        "cdf(quantile(p)) = p",
        worst_c < 1e-9,
        format!("worst gap = {worst_c:e}"),
    );

    // (d) Post-data tail probabilities are complementary.
    let mut worst_d: f64 = 0.0;
    for &dsic in &[-8.0, -3.6596817706, 0.0, 4.0, 15.0] {
        for &delta in &[0.1, 0.5, 1.0] {
            let e = EffectSpec::new(delta, 6, 12).unwrap();
            let p2 = post_data_p(dsic, 24, &e, FavoredModel::Model1).unwrap();
            let p1 = post_data_p(dsic, 24, &e, FavoredModel::Model2).unwrap();
            worst_d = worst_d.max((p1 + p2 - 1.0).abs());
        }
    }
    c.check("P1 + P2 = 1", worst_d < 1e-12, format!("worst gap = {worst_d:e}"));

    // (e) Evidence value is invariant to rescaling the response.
    let ModelInputs { design: x, response: y, spec: cit_spec, .. } = load_citrus();
    let base = compare(&x, &y, &cit_spec).unwrap();
    let scaled = compare(
        &x,
        &ResponseVector::new(y.values() * 3.7).unwrap(),
        &cit_spec,
    )
    .unwrap();
    c.check(
        "delta_sic invariant under response rescaling",
        (base.delta_sic - scaled.delta_sic).abs() < 1e-9
            && (base.f_stat - scaled.f_stat).abs() < 1e-9 * base.f_stat
            && (base.p_value - scaled.p_value).abs() < 1e-9,
        format!("|gap| = {:e}", (base.delta_sic - scaled.delta_sic).abs()),
    );

    // (f) Boundary misleading probabilities meet their budgets.
    let mut worst_f: f64 = f64::NEG_INFINITY;
    for &(n, delta, g1, g2) in &[
        (24usize, 0.5, 0.05, 0.05),
        (24, 1.0, 0.05, 0.05),
        (50, 0.5, 0.01, 0.10),
        (100, 0.25, 0.10, 0.025),
    ] {
        let e = EffectSpec::new(delta, 6, 12).unwrap();
        let d = design_thresholds(n, &e, g1, g2).unwrap();
        let t = misleading_probs(&d, d.lambda).unwrap();
        worst_f = worst_f.max(t.m1 - g1).max(t.m2 - g2);
    }
    c.check(
        "budget guarantee at the boundary",
        worst_f <= 1e-6,
        format!("worst excess = {worst_f:e}"),
    );

    // (g) Error-table identity V = 1 - (W + M).
    let e = EffectSpec::new(0.5, 6, 12).unwrap();
    let d = design_thresholds(24, &e, 0.05, 0.05).unwrap();
    let mut worst_g: f64 = 0.0;
    for &lam in &[0.0, 3.0, 6.0, 20.0, 60.0] {
        let t = misleading_probs(&d, lam).unwrap();
        worst_g = worst_g
            .max((t.v1 - (1.0 - (t.w1 + t.m1))).abs())
            .max((t.v2 - (1.0 - (t.w2 + t.m2))).abs());
    }
    c.check("V = 1 - (W + M)", worst_g < 1e-12, format!("worst gap = {worst_g:e}"));

    // The F <-> evidence mapping is an exact inverse pair.
    let mut worst_rt: f64 = 0.0;
    for &f in &[0.0, 0.5842, 1.8006568144498195, 5.698, 29.0] {
        let dsic = delta_sic_from_f(f, 24, 6, 12);
        let back = f_from_delta_sic(dsic, 24, 6, 12).unwrap();
        worst_rt = worst_rt.max((back - f).abs() / f.max(1.0));
    }
    c.check(
        "F to evidence scale round trip",
        worst_rt < 1e-10,
        format!("worst relative gap = {worst_rt:e}"),
    );

    // (h) Misleading probabilities with the thresholds frozen at the n = 24
    // design: the upper-tail error under the null falls monotonically; the
    // lower-tail error at the boundary alternative rises once (the fixed
    // threshold's F-scale image initially outruns the drifting alternative)
    // before collapsing; both are far below 1e-3 by n = 400. Values are
    // pinned against an independent high-precision oracle.
    let k1 = d.k1;
    let k2 = d.k2;
    let grid = [24usize, 50, 100, 200, 400];
    let m2_oracle = [5.0e-2, 1.035858e-1, 3.756064e-2, 8.718942e-4, 2.175057e-8];
    let m1_oracle = [5.212753e-3, 5.369203e-5, 1.939523e-6, 1.274827e-7, 1.185069e-8];
    let mut m1_vals = Vec::new();
    let mut m2_vals = Vec::new();
    for &n in &grid {
        let at_null = trichotomy_probs(n, 6, 12, k1, k2, 0.0).unwrap();
        let at_boundary = trichotomy_probs(n, 6, 12, k1, k2, 0.25 * n as f64).unwrap();
        m1_vals.push(at_null.m1);
        m2_vals.push(at_boundary.m2);
    }
    println!("    m1 under null:      [{}]", fmt_sci(&m1_vals));
    println!("    m2 under boundary:  [{}]", fmt_sci(&m2_vals));
    for i in 0..grid.len() {
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-10);
        c.check(
            &format!("m1(n = {}) matches oracle", grid[i]),
            rel(m1_vals[i], m1_oracle[i]) < 1e-4,
            format!("{:e} vs {:e}", m1_vals[i], m1_oracle[i]),
        );
        c.check(
            &format!("m2(n = {}) matches oracle", grid[i]),
            rel(m2_vals[i], m2_oracle[i]) < 1e-4,
            format!("{:e} vs {:e}", m2_vals[i], m2_oracle[i]),
        );
    }
    c.check(
        "m1 strictly decreasing over the grid",
        m1_vals.windows(2).all(|w| w[1] < w[0]),
        format!("[{}]", fmt_sci(&m1_vals)),
    );
    c.check(
        "m2 strictly decreasing beyond the initial rise",
        m2_vals[1..].windows(2).all(|w| w[1] < w[0]),
        format!("[{}]", fmt_sci(&m2_vals[1..])),
    );
    c.check(
        "both tails below 1e-3 by n = 400",
        m1_vals[4] < 1e-3 && m2_vals[4] < 1e-3,
        format!("m1 = {:e}, m2 = {:e}", m1_vals[4], m2_vals[4]),
    );
    c.finish("criterion 6");
}

#[test]
fn criterion_7_distributional_oracle() {
    let mut c = Clauses::new();
    let ModelInputs { design, spec, .. } = load_citrus();
    let kept: Vec<usize> = (0..6).collect();
    let x1 = design.entries().select_columns(&kept);
    let beta1 = DVector::from_row_slice(&[55.0, -14.0, -5.0, -8.0, 6.0, -10.0]);
    let sigma = 6.5;
    let reps = 2000;
    let critical = 1.62762 / (reps as f64).sqrt();

    // Null: data simulated with the dropped block at zero.
    let mu0 = &x1 * &beta1;
    let mut rng = ChaCha8Rng::seed_from_u64(70_001);
    let mut fs = simulate_f_stats(&design, &spec, &mu0, sigma, reps, &mut rng);
    fs.sort_by(|a, b| a.total_cmp(b));
    let central = NcfParams::new(6, 12, 0.0).unwrap();
    let d_null = ks_distance(&fs, |u| central.cdf(u).unwrap());
    c.check(
        "null F statistics match central F (KS at 1%)",
        d_null < critical,
        format!("D = {d_null:.5}, critical = {critical:.5}"),
    );

    // Alternative: a fixed nonzero dropped block, lambda from the design.
    let mut beta = DVector::zeros(12);
    beta.rows_mut(0, 6).copy_from(&beta1);
    for i in 6..12 {
        beta[i] = if i % 2 == 0 { 4.0 } else { -3.0 };
    }
    let lambda = noncentrality(&design, &spec, &beta, sigma * sigma).unwrap();
    let mu1 = design.entries() * &beta;
    let mut fs = simulate_f_stats(&design, &spec, &mu1, sigma, reps, &mut rng);
    fs.sort_by(|a, b| a.total_cmp(b));
    let ncf = NcfParams::new(6, 12, lambda).unwrap();
    let d_alt = ks_distance(&fs, |u| ncf.cdf(u).unwrap());
    c.check(
        "alternative F statistics match noncentral F (KS at 1%)",
        d_alt < critical,
        format!("lambda = {lambda:.3}, D = {d_alt:.5}, critical = {critical:.5}"),
    );
    c.finish("criterion 7");
}

fn simulate_f_stats(
    x: &DesignMatrix,
    spec: &ComparisonSpec,
    mu: &DVector<f64>,
    sigma: f64,
    reps: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    (0..reps)
        .map(|_| {
            let yv = DVector::from_iterator(
                mu.len(),
                mu.iter().map(|&m| m + sigma * rng.sample::<f64, _>(StandardNormal)),
            );
            compare(x, &ResponseVector::new(yv).unwrap(), spec)
                .unwrap()
                .f_stat
        })
        .collect()
}

fn fmt_sci(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.4e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn ks_distance<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        let c = cdf(v);
        d = d.max((c - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - c).abs());
    }
    d
}

fn random_design(rng: &mut ChaCha8Rng, n: usize, r: usize) -> (DesignMatrix, DVector<f64>) {
    let mut entries = DMatrix::zeros(n, r);
    for i in 0..n {
        entries[(i, 0)] = 1.0;
        for j in 1..r {
            entries[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let labels = (0..r).map(|j| format!("c{j}")).collect();
    let beta = DVector::from_iterator(r, (0..r).map(|_| rng.sample::<f64, _>(StandardNormal)));
    (DesignMatrix::new(entries, labels).unwrap(), beta)
}

fn read_kv_csv(path: &Path) -> std::collections::HashMap<String, f64> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .filter_map(|line| {
            let (k, v) = line.split_once(',')?;
            Some((k.to_string(), v.parse().ok()?))
        })
        .collect()
}

fn read_rows_csv(path: &Path) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|line| {
            line.split(',')
                .map(|v| v.parse().unwrap_or(f64::NAN))
                .collect()
        })
        .collect()
}

