//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any failed.

use std::f64::consts::FRAC_PI_2;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use mmw_cellsearch::array::{array_gain, beamwidth_3db, build_codebook, steering_vector};
use mmw_cellsearch::channel::{sample_channel, ChannelParams, LinkBudget};
use mmw_cellsearch::montecarlo::{
    estimate_from_trials, run_grid, AccessErrorEstimate, Arm, ExperimentConfig, GridRow,
};
use mmw_cellsearch::power::{adc_power, total_power, ComponentFile};
use mmw_cellsearch::schemes::{
    select_ci, select_combiner_ci, snr_dbf, snr_hbf, snr_psn, snr_single, SchemeKind,
};
use mmw_cellsearch::search::{
    draw_angular_error, sweep, sweep_exhaustive, Codebooks, SearchStrategy,
};
use mmw_cellsearch_cli::{cmd_sweep, SweepArgs};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

/// Id, name, runtime budget and check.
type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fmt_est(e: &AccessErrorEstimate) -> String {
    format!("{:.4} [{:.4}, {:.4}]", e.p_hat, e.ci95_low, e.ci95_high)
}

/// `a` strictly above `b` with disjoint intervals.
fn separated_above(a: &AccessErrorEstimate, b: &AccessErrorEstimate) -> bool {
    a.ci95_low > b.ci95_high
}

fn crit_beamwidths() -> Outcome {
    let bw4 = beamwidth_3db(4).unwrap().to_degrees();
    let bw16 = beamwidth_3db(16).unwrap().to_degrees();
    check((bw4 - 25.7).abs() <= 0.1, || {
        format!("N=4 gives {bw4:.4} deg")
    })?;
    check((bw16 - 6.38).abs() <= 0.02, || {
        format!("N=16 gives {bw16:.4} deg")
    })?;
    Ok(format!("N=4 {bw4:.3} deg, N=16 {bw16:.3} deg"))
}

fn crit_adc_point() -> Outcome {
    let p = adc_power(12.5e-12, 500e6, 5).unwrap();
    check(p == 0.2, || format!("got {p:e} W"))?;
    Ok(format!("{p} W"))
}

fn crit_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [2usize, 4, 8, 16] {
        let cb = build_codebook(n).unwrap();
        for _ in 0..1000 {
            let phi: f64 = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
            let a = steering_vector(n, phi).unwrap();
            let mut best = (f64::NEG_INFINITY, 0);
            for (i, w) in cb.vectors().iter().enumerate() {
                let g = array_gain(w, &a).unwrap();
                if g > best.0 {
                    best = (g, i);
                }
            }
            let chosen = select_combiner_ci(&cb, phi);
            let g_chosen = array_gain(cb.vector(chosen), &a).unwrap();
            check(g_chosen == best.0, || {
                format!("N={n} phi={phi}: chose {chosen}, argmax is {}", best.1)
            })?;
        }
    }

    let params = ChannelParams {
        n_bs: 4,
        n_ms: 4,
        ..ChannelParams::default()
    };
    let budget = LinkBudget::default();
    let noise = budget.noise_power();
    let cbs = Codebooks::new(4, 4).unwrap();
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chan = sample_channel(&params, 100.0, &mut rng).unwrap();
        let mut table_max = (f64::NEG_INFINITY, 0, 0);
        for (j, w_bs) in cbs.bs.vectors().iter().enumerate() {
            for (i, w_ms) in cbs.ms.vectors().iter().enumerate() {
                let snr = snr_single(chan.matrix(), w_bs, w_ms, budget.tx_power_w, noise).unwrap();
                if snr > table_max.0 {
                    table_max = (snr, j, i);
                }
            }
        }
        let res = sweep_exhaustive(&chan, &cbs, &budget).unwrap();
        check(res.best_snr == table_max.0, || {
            format!(
                "seed {seed}: sweep {} vs table {}",
                res.best_snr, table_max.0
            )
        })?;
        check(
            res.bs_index == table_max.1 && res.ms_index == Some(table_max.2),
            || format!("seed {seed}: argmax pair differs"),
        )?;
    }
    Ok("4000 angles and 100 channels agree exactly".into())
}

fn crit_scheme_ordering() -> Outcome {
    let params = ChannelParams {
        n_bs: 64,
        n_ms: 16,
        n_paths: 1,
        rician_k: 10.0,
        ..ChannelParams::default()
    };
    let budget = LinkBudget::default();
    let noise = budget.noise_power();
    let tx = budget.tx_power_w;
    let cbs = Codebooks::new(64, 16).unwrap();
    let tol = 1e-12;
    let trials = 10_000u64;
    let mut comparisons = 0u64;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        rng.set_stream(t);
        let chan = sample_channel(&params, 100.0, &mut rng).unwrap();
        let err = draw_angular_error(10f64.to_radians(), &mut rng);
        let ci = chan.true_aoa() + err;
        let abf = select_ci(&cbs.ms, ci, 1).unwrap();
        let multi = select_ci(&cbs.ms, ci, 3).unwrap();
        let h = chan.matrix();
        for w_bs in cbs.bs.vectors() {
            let s_abf = snr_single(h, w_bs, cbs.ms.vector(abf.main_index), tx, noise).unwrap();
            let s_psn = snr_psn(h, w_bs, &multi, &cbs.ms, tx, noise).unwrap();
            let s_hbf = snr_hbf(h, w_bs, &multi, &cbs.ms, tx, noise).unwrap();
            let s_dbf = snr_dbf(h, w_bs, tx, noise).unwrap();
            check(s_psn >= s_abf, || {
                format!("trial {t}: PSN {s_psn} < ABF {s_abf}")
            })?;
            check(s_hbf >= s_psn * (1.0 - tol), || {
                format!("trial {t}: HBF {s_hbf} < PSN {s_psn}")
            })?;
            check(s_dbf >= s_hbf * (1.0 - tol), || {
                format!("trial {t}: DBF {s_dbf} < HBF {s_hbf}")
            })?;
            comparisons += 1;
        }
    }
    Ok(format!(
        "{trials} trials, {comparisons} beam pairs ordered (relative rounding tolerance {tol:e})"
    ))
}

const DISTANCES: [f64; 3] = [25.0, 75.0, 150.0];

/// Shared grid for the access-error trend criteria.
struct TrendGrid {
    rows: Vec<GridRow>,
    elapsed: Duration,
}

fn trend_grid() -> &'static TrendGrid {
    static GRID: OnceLock<TrendGrid> = OnceLock::new();
    GRID.get_or_init(|| {
        let start = Instant::now();
        let mut rows = Vec::new();
        let configs = [
            (
                16,
                vec![
                    Arm::random(),
                    Arm::exhaustive(),
                    Arm::ci(SchemeKind::Abf),
                    Arm::ci(SchemeKind::Psn(3)),
                    Arm::ci(SchemeKind::Hbf(3)),
                    Arm::ci(SchemeKind::Dbf),
                ],
            ),
            (4, vec![Arm::ci(SchemeKind::Abf)]),
        ];
        for (n_ms, arms) in configs {
            let config = ExperimentConfig {
                channel: ChannelParams::default(),
                budget: LinkBudget::default(),
                arms,
                distances_m: DISTANCES.to_vec(),
                max_angular_errors: [0.0f64, 5.0, 10.0].iter().map(|d| d.to_radians()).collect(),
                n_ms: vec![n_ms],
                threshold_db: -4.0,
                n_trials: 10_000,
                master_seed: 2016,
            };
            rows.extend(run_grid(&config).unwrap());
        }
        TrendGrid {
            rows,
            elapsed: start.elapsed(),
        }
    })
}

fn est(n_ms: usize, d: f64, phi_deg: f64, arm: Arm) -> &'static AccessErrorEstimate {
    let phi = phi_deg.to_radians();
    &trend_grid()
        .rows
        .iter()
        .find(|r| {
            r.cell.n_ms == n_ms
                && r.cell.distance_m == d
                && r.cell.max_angular_error == phi
                && r.arm == arm
        })
        .unwrap_or_else(|| panic!("no row for n_ms={n_ms} d={d} phi={phi_deg} {arm:?}"))
        .estimate
}

fn ci(scheme: SchemeKind) -> Arm {
    Arm::ci(scheme)
}

fn crit_search_trend() -> Outcome {
    let mut detail = Vec::new();
    for d in DISTANCES {
        let rs = est(16, d, 0.0, Arm::random());
        let es = est(16, d, 0.0, Arm::exhaustive());
        let cia = est(16, d, 0.0, ci(SchemeKind::Abf));
        check(separated_above(rs, es), || {
            format!("{d} m: RS {} not above ES {}", fmt_est(rs), fmt_est(es))
        })?;
        check(separated_above(rs, cia), || {
            format!("{d} m: RS {} not above CI {}", fmt_est(rs), fmt_est(cia))
        })?;
        check(es.overlaps(cia), || {
            format!("{d} m: ES {} and CI {} differ", fmt_est(es), fmt_est(cia))
        })?;
        let ratio = es.mean_slots / cia.mean_slots;
        check(ratio == 32.0, || format!("{d} m: slot ratio {ratio}"))?;
        detail.push(format!(
            "{d} m RS {:.4} ES {:.4} CI {:.4}",
            rs.p_hat, es.p_hat, cia.p_hat
        ));
    }
    Ok(format!("{}; slot ratio 32", detail.join(", ")))
}

fn nondecreasing(a: &AccessErrorEstimate, b: &AccessErrorEstimate) -> bool {
    b.p_hat >= a.p_hat || a.overlaps(b)
}

fn crit_error_trend() -> Outcome {
    let abf = ci(SchemeKind::Abf);
    let mut detail = Vec::new();
    for d in DISTANCES {
        let p: Vec<_> = [0.0, 5.0, 10.0]
            .iter()
            .map(|&e| est(16, d, e, abf))
            .collect();
        check(
            nondecreasing(p[0], p[1]) && nondecreasing(p[1], p[2]),
            || {
                format!(
                    "{d} m: N_MS=16 not nondecreasing: {} {} {}",
                    fmt_est(p[0]),
                    fmt_est(p[1]),
                    fmt_est(p[2])
                )
            },
        )?;
        let deg16 = p[2].p_hat - p[0].p_hat;
        let deg4 = est(4, d, 10.0, abf).p_hat - est(4, d, 0.0, abf).p_hat;
        check(deg16 > deg4, || {
            format!("{d} m: degradation N_MS=16 {deg16:.4} vs N_MS=4 {deg4:.4}")
        })?;
        detail.push(format!("{d} m +{deg16:.4} vs +{deg4:.4}"));
    }
    let far = *DISTANCES.last().unwrap();
    let (p16, p4) = (est(16, far, 5.0, abf), est(4, far, 5.0, abf));
    check(p16.p_hat <= p4.p_hat, || {
        format!(
            "{far} m at 5 deg: N_MS=16 {} above N_MS=4 {}",
            fmt_est(p16),
            fmt_est(p4)
        )
    })?;
    Ok(format!("10 deg degradation 16 vs 4: {}", detail.join(", ")))
}

fn crit_psn_vs_abf() -> Outcome {
    let (abf, psn) = (ci(SchemeKind::Abf), ci(SchemeKind::Psn(3)));
    let mut separated = 0;
    for d in DISTANCES {
        let (pa, pp) = (est(16, d, 10.0, abf), est(16, d, 10.0, psn));
        check(pp.p_hat <= pa.p_hat, || {
            format!("{d} m: PSN {} above ABF {}", fmt_est(pp), fmt_est(pa))
        })?;
        if separated_above(pa, pp) {
            separated += 1;
        }
        let (p0, p5) = (est(16, d, 0.0, psn), est(16, d, 5.0, psn));
        check(p0.overlaps(p5), || {
            format!(
                "{d} m: PSN 5 deg {} differs from 0 deg {}",
                fmt_est(p5),
                fmt_est(p0)
            )
        })?;
    }
    check(separated >= 1, || {
        "PSN never separated from ABF at 10 deg".into()
    })?;
    Ok(format!(
        "PSN below ABF at 10 deg, separated at {separated}/3 distances"
    ))
}

fn crit_receivers() -> Outcome {
    let (psn, hbf, dbf) = (
        ci(SchemeKind::Psn(3)),
        ci(SchemeKind::Hbf(3)),
        ci(SchemeKind::Dbf),
    );
    let mut detail = Vec::new();
    for d in DISTANCES {
        let (d0, d10) = (est(16, d, 0.0, dbf), est(16, d, 10.0, dbf));
        check(d0 == d10, || {
            format!(
                "{d} m: DBF 0 deg {} vs 10 deg {}",
                fmt_est(d0),
                fmt_est(d10)
            )
        })?;
        let (p0, h0) = (est(16, d, 0.0, psn), est(16, d, 0.0, hbf));
        check(h0.p_hat <= p0.p_hat, || {
            format!("{d} m: HBF {} above PSN {}", fmt_est(h0), fmt_est(p0))
        })?;
        let (p10, h10) = (est(16, d, 10.0, psn), est(16, d, 10.0, hbf));
        let (gap0, gap10) = (p0.p_hat - h0.p_hat, p10.p_hat - h10.p_hat);
        check(gap10 <= gap0 || p10.overlaps(h10), || {
            format!("{d} m: PSN-HBF gap grows from {gap0:.4} to {gap10:.4}")
        })?;
        detail.push(format!("{d} m gap {gap0:.4} -> {gap10:.4}"));
    }

    // per-trial identity, independent of the grid runner
    let params = ChannelParams::default();
    let budget = LinkBudget::default();
    let cbs = Codebooks::new(params.n_bs, params.n_ms).unwrap();
    for t in 0..1000u64 {
        let mut snrs = [0.0; 2];
        for (k, max_err) in [0.0f64, 10f64.to_radians()].into_iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(t);
            let chan = sample_channel(&params, 100.0, &mut rng).unwrap();
            let strategy = SearchStrategy::ci(SchemeKind::Dbf, max_err);
            snrs[k] = sweep(&chan, &cbs, &strategy, &budget, &mut rng)
                .unwrap()
                .best_snr;
        }
        check(snrs[0] == snrs[1], || {
            format!("trial {t}: DBF {} vs {}", snrs[0], snrs[1])
        })?;
    }
    Ok(format!(
        "DBF identical across errors; {}",
        detail.join(", ")
    ))
}

fn components() -> ComponentFile {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/components.toml");
    ComponentFile::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn crit_power() -> Outcome {
    let comps = components().components;
    let n_ms = 16;
    let k = 3;
    let mut prev_gap = f64::NEG_INFINITY;
    let mut b1_dbf_max = None;
    for b in 1..=10 {
        let t = |s| total_power(s, &comps, n_ms, b).unwrap().total;
        let (abf, psn, hbf, dbf) = (
            t(SchemeKind::Abf),
            t(SchemeKind::Psn(k)),
            t(SchemeKind::Hbf(k)),
            t(SchemeKind::Dbf),
        );
        check(abf < psn && abf < hbf && abf < dbf, || {
            format!("b={b}: ABF not minimum")
        })?;
        check(psn < hbf, || {
            format!("b={b}: PSN {psn} not below HBF {hbf}")
        })?;
        let gap = hbf - psn;
        check(gap > prev_gap, || {
            format!("b={b}: HBF-PSN gap {gap} not increasing")
        })?;
        prev_gap = gap;
        let dbf_max = dbf > abf && dbf > psn && dbf > hbf;
        if b == 1 {
            b1_dbf_max = Some(dbf_max);
        } else {
            check(dbf_max, || format!("b={b}: DBF {dbf} not maximum"))?;
        }
    }
    Ok(format!(
        "orderings hold for b=1..10; DBF maximum at b=1: {}",
        b1_dbf_max.unwrap()
    ))
}

fn crit_statistics() -> Outcome {
    let p = 0.3;
    let n = 10_000u64;
    let repeats = 1000u64;
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    let mut within = 0;
    for r in 0..repeats {
        let e = estimate_from_trials(n, 0.0, |t| {
            let mut rng = ChaCha8Rng::seed_from_u64(r);
            rng.set_stream(t);
            let snr = if rng.random::<f64>() < p { 0.5 } else { 2.0 };
            Ok((snr, 1))
        })
        .unwrap();
        if (e.p_hat - p).abs() < 3.0 * sigma {
            within += 1;
        }
    }
    let frac = within as f64 / repeats as f64;
    check(frac >= 0.99, || {
        format!("only {within}/{repeats} repeats within 3 sigma")
    })?;

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("repro.toml");
    std::fs::write(
        &config,
        r#"name = "repro"
master_seed = 99
n_trials = 500
threshold_db = -4.0
distances_m = [50.0, 150.0]
phi_e_max_deg = [0.0, 10.0]
n_ms = [4, 16]

[[strategies]]
search = "random"

[[strategies]]
search = "exhaustive"

[[strategies]]
search = "ci"
scheme = "psn"
branches = 3
"#,
    )
    .unwrap();
    let run = |out: &str, workers| {
        let args = SweepArgs {
            config: config.clone(),
            out: dir.path().join(out),
            workers: Some(workers),
            ..SweepArgs::default()
        };
        std::fs::read(cmd_sweep(&args).unwrap().csv_path).unwrap()
    };
    let (a, b, c) = (run("a", 1), run("b", 1), run("c", 3));
    check(a == b, || "repeated sweep CSVs differ".into())?;
    check(a == c, || "sweep CSV depends on the worker count".into())?;
    Ok(format!(
        "{within}/{repeats} repeats within 3 sigma; {} CSV bytes reproduced",
        a.len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (
            1,
            "closed-form beamwidths",
            Duration::from_secs(1),
            crit_beamwidths,
        ),
        (2, "ADC power point", Duration::from_secs(1), crit_adc_point),
        (
            3,
            "oracle equivalence",
            Duration::from_secs(10),
            crit_oracles,
        ),
        (
            4,
            "scheme SNR ordering",
            Duration::from_secs(60),
            crit_scheme_ordering,
        ),
        (
            5,
            "search strategy trend",
            Duration::from_secs(300),
            crit_search_trend,
        ),
        (
            6,
            "angular error trend",
            Duration::from_secs(300),
            crit_error_trend,
        ),
        (7, "PSN against ABF", Duration::from_secs(300), crit_psn_vs_abf),
        (8, "PSN, HBF and DBF", Duration::from_secs(300), crit_receivers),
        (9, "power orderings", Duration::from_secs(1), crit_power),
        (
            10,
            "statistical engine",
            Duration::from_secs(120),
            crit_statistics,
        ),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".to_string()));
        // the shared trend grid is charged to criterion 5, which builds it
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|msg| {
            if elapsed <= budget {
                Ok(msg)
            } else {
                Err(format!("{msg}; took {elapsed:.1?}, budget {budget:?}"))
            }
        });
        match outcome {
            Ok(msg) => println!("criterion {id:>2} PASS  {name}: {msg} ({elapsed:.2?})"),
            Err(msg) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {msg} ({elapsed:.2?})");
            }
        }
        if id == 5 {
            println!(
                "             trend grid built in {:.2?}",
                trend_grid().elapsed
            );
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
