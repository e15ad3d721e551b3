//! Acceptance suite. Runs every criterion on the default campaign (25x25
//! grid, 500 periods, 15 runs, master seed 42) and prints one PASS/FAIL line
//! per criterion. Exits nonzero if any criterion fails.

use std::path::PathBuf;
use std::time::Instant;

use demsim_core::analytic::{hol_blocking_monte_carlo, hol_blocking_probability, HolParams};
use demsim_core::engine::{derive_seed, fifo_exact_expected, run_once, SeedLabels};
use demsim_core::sweep::{emit_csv, run_sweep, run_sweep_with_workers, Scenario, SweepParams, SweepResult, TableId};
use demsim_core::trace::{parse_workload, replay, timeline_stats, Timeline, Workload};
use demsim_core::{AccessCategory, PerAc, ScenarioConfig, Scheduler, UserId};

use AccessCategory::{BestEffort as BE, Voice as VO};

const MASTER_SEED: u64 = 42;

type Criterion<'a> = Box<dyn Fn() -> (bool, String) + 'a>;

struct Report {
    failed: usize,
}

impl Report {
    fn record(&mut self, id: &str, ok: bool, detail: String) {
        println!("{} criterion {id}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed += 1;
        }
    }
}

/// Collects the failing checks of one criterion.
#[derive(Default)]
struct Checks(Vec<String>);

impl Checks {
    fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.0.push(what());
        }
    }

    fn summary(&self, pass_note: String) -> (bool, String) {
        if self.0.is_empty() {
            (true, pass_note)
        } else {
            let shown: Vec<_> = self.0.iter().take(4).cloned().collect();
            (false, format!("{} failing check(s): {}", self.0.len(), shown.join("; ")))
        }
    }
}

fn hol(n_u: u32, n_s: u32) -> f64 {
    hol_blocking_probability(HolParams::new(n_u, n_s).unwrap())
}

fn criterion_1() -> (bool, String) {
    let mut c = Checks::default();
    for (n_u, n_s, want) in [
        (2, 2, 0.5),
        (3, 3, 1.0 - 6.0 / 27.0),
        (4, 4, 0.90625),
        (8, 4, 1.0 - 1680.0 / 4096.0),
    ] {
        let got = hol(n_u, n_s);
        c.expect(got == want, || format!("p({n_u},{n_s})={got} != {want}"));
    }
    let mut worst: f64 = 0.0;
    for n_s in 1..=8u32 {
        for n_u in n_s..=8u32 {
            let p = HolParams::new(n_u, n_s).unwrap();
            let mc = hol_blocking_monte_carlo(p, 1_000_000, 1000 + 10 * n_u as u64 + n_s as u64).unwrap();
            let z = mc.z_score(hol(n_u, n_s));
            worst = worst.max(z);
            c.expect(z < 3.0, || format!("MC ({n_u},{n_s}) z={z:.2}"));
        }
    }
    for n_s in 2..=4u32 {
        for n_u in n_s..8u32 {
            c.expect(hol(n_u + 1, n_s) <= hol(n_u, n_s), || format!("not non-increasing in n_u at ({n_u},{n_s})"));
        }
    }
    for n_u in 2..=8u32 {
        for n_s in 1..n_u {
            c.expect(hol(n_u, n_s + 1) >= hol(n_u, n_s), || format!("not non-decreasing in n_s at ({n_u},{n_s})"));
        }
    }
    c.summary(format!("exact values match; worst MC z-score {worst:.2} over 36 (n_u, n_s) pairs"))
}

fn criterion_2(one: &SweepResult) -> (bool, String) {
    let mut c = Checks::default();
    let (mut diff, mut dev): (f64, f64) = (0.0, 0.0);
    for a in 0..one.n_alpha() {
        let alpha = one.axes.alpha[a];
        let f = one.stats(Scheduler::Fifo, a, 0).mean_c;
        let d = one.stats(Scheduler::Dems, a, 0).mean_c;
        for ac in [VO, BE] {
            let x = (f[ac] - d[ac]).abs();
            diff = diff.max(x);
            c.expect(x < 0.03, || format!("alpha={alpha:.4} {ac}: |dems-fifo|={x:.4}"));
        }
        for (name, m) in [("fifo", f), ("dems", d)] {
            let x = (m[VO] - alpha).abs();
            dev = dev.max(x);
            c.expect(x < 0.03, || format!("{name} alpha={alpha:.4}: |c[VO]-alpha|={x:.4}"));
        }
    }
    c.summary(format!("max |dems-fifo| {diff:.4}, max |c[VO]-alpha| {dev:.4}"))
}

fn criterion_3(two: &SweepResult, three: &SweepResult) -> (bool, String) {
    let mut c = Checks::default();
    let mut notes = Vec::new();
    for (r, tol, avg) in [(two, 0.03, (1.5, 0.5)), (three, 0.04, (2.25, 0.75))] {
        let n = r.scenario.n_users() as f64;
        let mut worst: f64 = 0.0;
        for a in 0..r.n_alpha() {
            let alpha = r.axes.alpha[a];
            for b in 0..r.n_beta() {
                let m = r.stats(Scheduler::Dems, a, b).mean_c;
                for (ac, want) in [(VO, n * alpha), (BE, n * (1.0 - alpha))] {
                    let x = (m[ac] - want).abs();
                    worst = worst.max(x);
                    c.expect(x <= tol, || format!("{} ({a},{b}) {ac}: {:.4} vs {want:.4}", r.scenario, m[ac]));
                }
            }
        }
        let mut avg_worst: f64 = 0.0;
        for (ac, want) in [(VO, avg.0), (BE, avg.1)] {
            for (b, v) in r.t_avg_vs_beta(Scheduler::Dems, ac).into_iter().enumerate() {
                avg_worst = avg_worst.max((v - want).abs());
                c.expect((v - want).abs() <= 0.05, || format!("{} T_avg[{ac}](beta_{b})={v:.4}", r.scenario));
            }
        }
        notes.push(format!("{}: cell dev {worst:.4}, T_avg dev {avg_worst:.4}", r.scenario));
    }
    c.summary(notes.join(", "))
}

fn change_range(r: &SweepResult, ac: AccessCategory) -> (f64, f64, usize) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut unbounded = 0;
    for a in 0..r.n_alpha() {
        for b in 0..r.n_beta() {
            match r.t_change(ac, a, b).finite() {
                Some(v) => {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                None => unbounded += 1,
            }
        }
    }
    (lo, hi, unbounded)
}

fn criterion_4(two: &SweepResult, three: &SweepResult) -> (bool, String) {
    let mut c = Checks::default();
    let mut notes = Vec::new();
    for (r, min_band, max_band) in [(two, (15.0, 40.0), (80.0, 105.0)), (three, (20.0, 45.0), (85.0, 105.0))] {
        let (lo, hi, unbounded) = change_range(r, VO);
        c.expect(unbounded == 0, || format!("{}: {unbounded} unbounded VO cells", r.scenario));
        c.expect(lo > 0.0, || format!("{}: min T_change[VO]={lo:.2}% not positive", r.scenario));
        c.expect((min_band.0..=min_band.1).contains(&lo), || {
            format!("{}: min {lo:.2}% outside [{}, {}]", r.scenario, min_band.0, min_band.1)
        });
        c.expect((max_band.0..=max_band.1).contains(&hi), || {
            format!("{}: max {hi:.2}% outside [{}, {}]", r.scenario, max_band.0, max_band.1)
        });
        notes.push(format!("{} T_change[VO] in [{lo:.2}%, {hi:.2}%]", r.scenario));
    }
    c.summary(notes.join(", "))
}

fn criterion_5(two: &SweepResult, three: &SweepResult) -> (bool, String) {
    let mut c = Checks::default();
    let mut notes = Vec::new();
    for r in [two, three] {
        let mut min_low = f64::INFINITY;
        for a in 0..r.n_alpha() {
            let alpha = r.axes.alpha[a];
            if alpha > 0.75 + 1e-12 {
                continue;
            }
            for b in 0..r.n_beta() {
                match r.t_change(BE, a, b).finite() {
                    Some(v) => {
                        min_low = min_low.min(v);
                        c.expect(v > 0.0, || {
                            format!("{} alpha={alpha:.4} beta={:.4}: T_change[BE]={v:.3}%", r.scenario, r.axes.beta[b])
                        });
                    }
                    None => min_low = min_low.min(f64::INFINITY),
                }
            }
        }
        let last = r.t_change_vs_alpha(BE).pop().unwrap();
        let end = last.percent.unwrap_or(f64::NAN);
        c.expect((end + 100.0).abs() <= 2.0, || format!("{} T_change_avg[BE](1)={end:.3}%", r.scenario));
        notes.push(format!(
            "{}: min T_change[BE] at alpha<=0.75 {min_low:.3}%, at alpha=1 {end:.3}%",
            r.scenario
        ));
    }
    let (ok, detail) = c.summary(String::new());
    (ok, if ok { notes.join(", ") } else { format!("{detail} [{}]", notes.join(", ")) })
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut r = vec![0.0; xs.len()];
    let mut k = 0;
    while k < idx.len() {
        let mut m = k;
        while m + 1 < idx.len() && xs[idx[m + 1]] == xs[idx[k]] {
            m += 1;
        }
        let avg = (k + m) as f64 / 2.0 + 1.0;
        for &i in &idx[k..=m] {
            r[i] = avg;
        }
        k = m + 1;
    }
    r
}

fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn criterion_6(two: &SweepResult, three: &SweepResult) -> (bool, String) {
    let mut c = Checks::default();
    let mut notes = Vec::new();
    for (r, lo, hi) in [(two, (0.68, 0.10), (1.31, 0.12)), (three, (0.97, 0.10), (1.74, 0.15))] {
        let curve = r.t_avg_vs_alpha(Scheduler::Fifo, VO);
        let (first, last) = (curve[0], *curve.last().unwrap());
        let rho = spearman(&r.axes.alpha, &curve);
        c.expect((first - lo.0).abs() <= lo.1, || format!("{}: T_avg[VO](0.5)={first:.4}", r.scenario));
        c.expect((last - hi.0).abs() <= hi.1, || format!("{}: T_avg[VO](1)={last:.4}", r.scenario));
        c.expect(rho > 0.99, || format!("{}: Spearman {rho:.4}", r.scenario));
        notes.push(format!("{} {first:.4} -> {last:.4}, Spearman {rho:.4}", r.scenario));
    }
    c.summary(notes.join(", "))
}

fn sampled(cfg: &ScenarioConfig, scheduler: Scheduler, runs: u64) -> Vec<PerAc<f64>> {
    (0..runs)
        .map(|run_index| {
            let seed = derive_seed(
                MASTER_SEED,
                SeedLabels {
                    scenario: 100 + cfg.n_users as u64,
                    scheduler,
                    alpha_index: (cfg.alpha * 1e6) as u64,
                    beta_index: (cfg.beta * 1e6) as u64,
                    run_index,
                },
            );
            run_once(cfg, scheduler, seed).unwrap()
        })
        .collect()
}

fn mean_se(xs: &[PerAc<f64>], ac: AccessCategory) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().map(|x| x[ac]).sum::<f64>() / n;
    let var = xs.iter().map(|x| (x[ac] - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn z(m: f64, se: f64, want: f64) -> f64 {
    let d = (m - want).abs();
    if se > 0.0 {
        d / se
    } else if d < 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn criterion_7() -> (bool, String) {
    const RUNS: u64 = 400;
    const HORIZON: u32 = 6;
    let mut c = Checks::default();
    let (mut worst_fifo, mut worst_dems): (f64, f64) = (0.0, 0.0);
    for scenario in [Scenario::TwoUsers, Scenario::ThreeUsers] {
        let (b_lo, b_hi) = scenario.beta_range();
        let n = scenario.n_users();
        for alpha in [0.5, 0.75, 1.0] {
            for beta in [b_lo, (b_lo + b_hi) / 2.0, b_hi] {
                let cfg = ScenarioConfig::new(n).with_alpha(alpha).with_beta(beta).with_periods(HORIZON);
                let exact = fifo_exact_expected(&cfg, HORIZON).unwrap();
                let runs = sampled(&cfg, Scheduler::Fifo, RUNS);
                for ac in [VO, BE] {
                    let (m, se) = mean_se(&runs, ac);
                    let zz = z(m, se, exact[ac]);
                    worst_fifo = worst_fifo.max(zz);
                    c.expect(zz <= 3.0, || format!("fifo {scenario} a={alpha} b={beta:.4} {ac}: z={zz:.2}"));
                }

                let periods = 500;
                let cfg = cfg.with_periods(periods);
                let runs = sampled(&cfg, Scheduler::Dems, RUNS);
                for (ac, p) in [(VO, alpha), (BE, 1.0 - alpha)] {
                    let (m, _) = mean_se(&runs, ac);
                    let se = (n as f64 * p * (1.0 - p) / periods as f64 / RUNS as f64).sqrt();
                    let zz = z(m, se, n as f64 * p);
                    worst_dems = worst_dems.max(zz);
                    c.expect(zz <= 3.0, || format!("dems {scenario} a={alpha} b={beta:.4} {ac}: z={zz:.2}"));
                }
            }
        }
    }
    c.summary(format!(
        "horizon {HORIZON}, {RUNS} runs per spot; worst z fifo {worst_fifo:.2}, dems {worst_dems:.2}"
    ))
}

fn workload(name: &str) -> Workload {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "workloads", name].iter().collect();
    parse_workload(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn starts(t: &Timeline, user: u32, ac: AccessCategory) -> Vec<u32> {
    let u = UserId::new(user).unwrap();
    t.absolute()
        .into_iter()
        .filter(|(_, p)| p.frame.dest == u && p.frame.ac == ac)
        .map(|(s, _)| s)
        .collect()
}

fn vo_before_be(t: &Timeline, user: u32) -> bool {
    let (vo, be) = (starts(t, user, VO), starts(t, user, BE));
    vo.iter().max() <= be.iter().min()
}

fn criterion_8() -> (bool, String) {
    let mut c = Checks::default();
    let w4 = workload("fig4.wl");
    let f4 = timeline_stats(&replay(&w4, Scheduler::Fifo));
    let d4 = timeline_stats(&replay(&w4, Scheduler::Dems));
    c.expect((f4.periods, f4.completion[VO]) == (6, 4), || format!("fig4 fifo {f4}"));
    c.expect((d4.periods, d4.completion[VO]) == (5, 3), || format!("fig4 dems {d4}"));
    let w5 = workload("fig5.wl");
    let f5 = timeline_stats(&replay(&w5, Scheduler::Fifo));
    let d5 = timeline_stats(&replay(&w5, Scheduler::Dems));
    c.expect(d5.padding_units == 0, || format!("fig5 dems padding {}", d5.padding_units));
    c.expect(f5.padding_units >= 1, || format!("fig5 fifo padding {}", f5.padding_units));
    let w6 = workload("fig6.wl");
    let f6 = replay(&w6, Scheduler::Fifo);
    let d6 = replay(&w6, Scheduler::Dems);
    c.expect(vo_before_be(&d6, 2), || "fig6 dems serves a u2 BE frame before a u2 VO frame".into());
    c.expect(!vo_before_be(&f6, 2), || "fig6 fifo serves every u2 VO frame first".into());
    c.summary(format!(
        "fig4 fifo {}/{} dems {}/{}; fig5 padding fifo {} dems {}; fig6 ordering ok",
        f4.periods, f4.completion[VO], d4.periods, d4.completion[VO], f5.padding_units, d5.padding_units
    ))
}

fn criterion_9(sweeps: &[&SweepResult]) -> (bool, String) {
    let mut c = Checks::default();
    for r in sweeps {
        let params = SweepParams::new(r.scenario, MASTER_SEED);
        for workers in [1, 3] {
            let again = run_sweep_with_workers(params, Some(workers)).unwrap();
            for id in TableId::ALL {
                c.expect(emit_csv(&again.table(id)) == emit_csv(&r.table(id)), || {
                    format!("{} {id} differs with {workers} worker(s)", r.scenario)
                });
            }
        }
    }
    c.summary(format!("{} scenarios x 6 tables identical at 1, 3 and default workers", sweeps.len()))
}

fn main() {
    let t0 = Instant::now();
    let mut report = Report { failed: 0 };
    let sweep = |s| run_sweep(SweepParams::new(s, MASTER_SEED)).expect("sweep runs");
    let (one, two, three) = (sweep(Scenario::OneUser), sweep(Scenario::TwoUsers), sweep(Scenario::ThreeUsers));
    println!(
        "campaign: master_seed={MASTER_SEED} grid=25x25 periods=500 runs=15 ({:.1}s)",
        t0.elapsed().as_secs_f64()
    );

    let results: [(&str, Criterion); 9] = [
        ("1 (HOL formula)", Box::new(criterion_1)),
        ("2 (single user)", Box::new(|| criterion_2(&one))),
        ("3 (DEMS exactness)", Box::new(|| criterion_3(&two, &three))),
        ("4 (VO always improves)", Box::new(|| criterion_4(&two, &three))),
        ("5 (BE regime boundary)", Box::new(|| criterion_5(&two, &three))),
        ("6 (802.11ac marginal bands)", Box::new(|| criterion_6(&two, &three))),
        ("7 (oracle equivalence)", Box::new(criterion_7)),
        ("8 (trace goldens)", Box::new(criterion_8)),
        ("9 (determinism)", Box::new(|| criterion_9(&[&one, &two, &three]))),
    ];
    for (id, f) in results.iter() {
        let (ok, detail) = f();
        report.record(id, ok, detail);
    }
    println!(
        "acceptance: {} of 9 criteria passed ({:.1}s)",
        9 - report.failed,
        t0.elapsed().as_secs_f64()
    );
    if report.failed > 0 {
        std::process::exit(1);
    }
}
