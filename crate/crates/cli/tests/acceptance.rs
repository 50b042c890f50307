//! Acceptance suite: one PASS/FAIL line per criterion.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use epicast::baselines::rw_forecast;
use epicast::evaluation::significance::{
    iman_f, wilcoxon_exact_p, wilcoxon_signed_rank, DEFAULT_ALPHA,
};
use epicast::evaluation::midranks;
use epicast::ewnet::{
    conformal_interval, fit_ewnet, precontrol_interval, select_p, EwnetConfig,
};
use epicast::metrics;
use epicast::neuralnet::{hidden_neurons, loss_and_gradient, LaggedPairs, TrainConfig};
use epicast::wavelet::{haar_filter, modwt_filters, modwt_forward, mra_reconstruct};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_series(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let scale = 10f64.powf(rng.random_range(-2.0..4.0));
    (0..n).map(|_| scale * rng.random_range(-1.0..1.0)).collect()
}

fn max_levels(n: usize) -> usize {
    (usize::BITS - 1 - n.leading_zeros()) as usize
}

fn reconstruction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.random_range(8..=512);
        let y = random_series(&mut rng, n);
        let j = rng.random_range(1..=max_levels(n));
        let dec = modwt_forward(&y, j, &haar_filter()).unwrap();
        let back = mra_reconstruct(&dec).unwrap();
        let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = y.iter().zip(&back).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / peak;
        worst = worst.max(err);
    }
    let took = start.elapsed();
    outcome(
        worst <= 1e-8 && took < Duration::from_secs(10),
        format!("max relative error {worst:.2e} in {:.2}s", took.as_secs_f64()),
    )
}

/// Haar level-j filters in closed form.
fn haar_level_filters(j: usize) -> (Vec<f64>, Vec<f64>) {
    let len = 1usize << j;
    let a = 1.0 / len as f64;
    let wavelet = (0..len).map(|l| if l < len / 2 { a } else { -a }).collect();
    (wavelet, vec![a; len])
}

/// Dense circulant matrix with row t holding f at columns (t - l) mod N.
fn circulant(f: &[f64], n: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for (t, row) in m.iter_mut().enumerate() {
        for (l, &c) in f.iter().enumerate() {
            row[(t + n * f.len() - l) % n] += c;
        }
    }
    m
}

fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

fn mat_t_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n).map(|s| (0..n).map(|t| m[t][s] * x[t]).sum()).collect()
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(8..=96);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
        let levels = rng.random_range(1..=max_levels(n) + 1);
        let dec = modwt_forward(&y, levels, &haar_filter()).unwrap();
        for j in 1..=levels {
            let (h, g) = haar_level_filters(j);
            let u = circulant(&h, n);
            let w = mat_vec(&u, &y);
            worst = worst.max(max_gap(&w, &dec.wavelet_coefficients[j - 1]));
            worst = worst.max(max_gap(&mat_t_vec(&u, &w), &dec.details[j - 1]));
            if j == levels {
                let v = circulant(&g, n);
                let s = mat_vec(&v, &y);
                worst = worst.max(max_gap(&s, &dec.scaling_coefficients));
                worst = worst.max(max_gap(&mat_t_vec(&v, &s), &dec.smooth));
            }
        }
    }
    outcome(worst <= 1e-10, format!("max deviation {worst:.2e}"))
}

fn filter_invariants() -> Outcome {
    let f = haar_filter();
    let (h, g) = (f.wavelet(), f.scaling());
    let l = h.len();
    let mut worst: f64 = 0.0;
    worst = worst.max(h.iter().sum::<f64>().abs());
    worst = worst.max((h.iter().map(|x| x * x).sum::<f64>() - 1.0).abs());
    worst = worst.max((g.iter().sum::<f64>() - 2f64.sqrt()).abs());
    worst = worst.max((g.iter().map(|x| x * x).sum::<f64>() - 1.0).abs());
    for shift in (2..l).step_by(2) {
        worst = worst.max(h.iter().zip(&h[shift..]).map(|(a, b)| a * b).sum::<f64>().abs());
        worst = worst.max(g.iter().zip(&g[shift..]).map(|(a, b)| a * b).sum::<f64>().abs());
    }
    for i in 0..l {
        let sign = if (i + 1) % 2 == 0 { 1.0 } else { -1.0 };
        worst = worst.max((g[i] - sign * h[l - 1 - i]).abs());
    }
    let mut shape_ok = true;
    for j in 1..=10 {
        let m = modwt_filters(&f, j).unwrap();
        let energy = 2f64.powi(-(j as i32));
        worst = worst.max((m.wavelet.iter().map(|x| x * x).sum::<f64>() - energy).abs());
        worst = worst.max((m.scaling.iter().map(|x| x * x).sum::<f64>() - energy).abs());
        let width = ((1usize << j) - 1) * (l - 1) + 1;
        shape_ok &= m.width == width && m.wavelet.len() == width && m.scaling.len() == width;
    }
    outcome(
        worst <= 1e-12 && shape_ok,
        format!("max deviation {worst:.2e}, widths {}", if shape_ok { "ok" } else { "wrong" }),
    )
}

/// Half MSE of a logistic-hidden, linear-output network, written out directly.
fn oracle_loss(params: &[f64], p: usize, k: usize, z: &[f64]) -> f64 {
    let w = &params[..k * p];
    let b = &params[k * p..k * p + k];
    let v = &params[k * p + k..k * p + 2 * k];
    let c = params[k * p + 2 * k];
    let mut total = 0.0;
    for t in p..z.len() {
        let mut out = c;
        for i in 0..k {
            let mut a = b[i];
            for m in 0..p {
                a += w[i * p + m] * z[t - p + m];
            }
            out += v[i] / (1.0 + (-a).exp());
        }
        total += 0.5 * (out - z[t]).powi(2);
    }
    total / (z.len() - p) as f64
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let p = rng.random_range(1..=10);
        let k = rng.random_range(1..=5);
        let z: Vec<f64> = (0..p + 15).map(|_| rng.random_range(-2.0..2.0)).collect();
        let params: Vec<f64> = (0..k * p + 2 * k + 1).map(|_| rng.random_range(-1.5..1.5)).collect();
        let (_, grad) = loss_and_gradient(&params, k, &LaggedPairs::new(&z, p).unwrap());
        for (i, g) in grad.iter().enumerate() {
            let h = 1e-5;
            let mut up = params.clone();
            let mut down = params.clone();
            up[i] += h;
            down[i] -= h;
            let fd = (oracle_loss(&up, p, k, &z) - oracle_loss(&down, p, k, &z)) / (2.0 * h);
            let rel = (g - fd).abs() / (g.abs().max(fd.abs()) + 1e-8);
            worst = worst.max(rel);
        }
    }
    outcome(worst <= 1e-4, format!("max relative gap {worst:.2e}"))
}

fn neuron_rule() -> Outcome {
    let pairs = [
        (19, 10),
        (15, 8),
        (14, 7),
        (13, 7),
        (12, 6),
        (11, 6),
        (10, 5),
        (9, 5),
        (7, 4),
        (6, 3),
        (5, 3),
        (4, 2),
        (2, 1),
        (1, 1),
    ];
    let wrong: Vec<_> = pairs.iter().filter(|(p, k)| hidden_neurons(*p) != *k).collect();
    outcome(wrong.is_empty(), format!("{} of {} pairs match", pairs.len() - wrong.len(), pairs.len()))
}

fn statistic_reproduction() -> Outcome {
    let reference = [(316.60, 20.686), (306.88, 19.766), (302.00, 19.314), (311.42, 20.193)];
    let mut worst: f64 = 0.0;
    let mut df_ok = true;
    for (chi2, f) in reference {
        let r = iman_f(chi2, 23, 45).unwrap();
        worst = worst.max((r.statistic - f).abs());
        df_ok &= r.df == [22.0, 968.0];
    }
    outcome(worst <= 0.01 && df_ok, format!("max deviation {worst:.4}, df (22, 968) {df_ok}"))
}

fn metric_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut smape_max: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=40);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
        let lag = rng.random_range(1..=4);
        let train: Vec<f64> = (0..lag + 20).map(|_| rng.random_range(-100.0..100.0)).collect();

        let mut se = 0.0;
        let mut ae = 0.0;
        let mut sm = 0.0;
        for i in 0..n {
            se += (a[i] - f[i]).powi(2);
            ae += (a[i] - f[i]).abs();
            sm += 200.0 * (f[i] - a[i]).abs() / (a[i].abs() + f[i].abs());
        }
        let nf = n as f64;
        let mut naive = 0.0;
        for t in lag..train.len() {
            naive += (train[t] - train[t - lag]).abs();
        }
        let scale = naive / (train.len() - lag) as f64;
        let want = [(se / nf).sqrt(), ae / nf, ae / nf / scale, sm / nf];
        let got = [
            metrics::rmse(&a, &f).unwrap(),
            metrics::mae(&a, &f).unwrap(),
            metrics::mase(&a, &f, &train, lag).unwrap(),
            metrics::smape(&a, &f).unwrap(),
        ];
        for (w, g) in want.iter().zip(&got) {
            worst = worst.max((w - g).abs() / w.abs().max(1.0));
        }
        smape_max = smape_max.max(got[3]);
    }
    outcome(
        worst <= 1e-10 && smape_max <= 200.0,
        format!("max deviation {worst:.2e}, largest sMAPE {smape_max:.3}"),
    )
}

fn seasonal_trend_series(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 3.0).unwrap();
    let mut e = 0.0;
    (0..600)
        .map(|t| {
            e = 0.6 * e + noise.sample(&mut rng);
            let t = t as f64;
            50.0 + 0.05 * t + 20.0 * (2.0 * std::f64::consts::PI * t / 52.0).sin() + e
        })
        .collect()
}

fn forecast_sanity() -> Outcome {
    let start = Instant::now();
    let mut wins = 0;
    for rep in 0..10u64 {
        let y = seasonal_trend_series(rep);
        let (history, test) = y.split_at(574);
        let (train, val) = history.split_at(522);
        let cfg = EwnetConfig {
            horizon: 26,
            train: TrainConfig {
                restarts: 3,
                seed: rep,
                ..TrainConfig::default()
            },
            ..EwnetConfig::default()
        };
        let p = select_p(train, val, &cfg).unwrap().p;
        let ewnet = fit_ewnet(history, p, &cfg).unwrap().forecast(26).unwrap();
        let rw = rw_forecast(history, 26).unwrap();
        let e = metrics::mase(test, &ewnet, history, 1).unwrap();
        let r = metrics::mase(test, &rw, history, 1).unwrap();
        if e < r {
            wins += 1;
        }
    }
    let took = start.elapsed();
    outcome(
        wins >= 8 && took < Duration::from_secs(300),
        format!("EWNet beat RW in {wins}/10 in {:.0}s", took.as_secs_f64()),
    )
}

fn interval_calibration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (n_train, n_cal, n_test) = (60, 28, 5);
    let cfg = EwnetConfig {
        train: TrainConfig {
            restarts: 2,
            epochs: 200,
            ..TrainConfig::default()
        },
        ..EwnetConfig::default()
    };
    let (mut pre, mut conf, mut total) = (0usize, 0usize, 0usize);
    for trial in 0..500u64 {
        let y: Vec<f64> = (0..n_train + n_cal + n_test)
            .map(|_| 20.0 + 2.0 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let (train, rest) = y.split_at(n_train);
        let (cal, test) = rest.split_at(n_cal);
        let trial_cfg = EwnetConfig {
            train: cfg.train.with_seed(trial),
            ..cfg.clone()
        };
        let model = fit_ewnet(train, 2, &trial_cfg).unwrap();
        let cal_errors = model.rolling_one_step_errors(cal).unwrap();
        let test_errors = model.rolling_one_step_errors(rest).unwrap()[n_cal..].to_vec();
        let points: Vec<f64> = test.iter().zip(&test_errors).map(|(a, e)| a + e).collect();
        let pc = precontrol_interval(&points, &model.residuals().unwrap()).unwrap();
        let cf = conformal_interval(&points, &cal_errors, 0.9).unwrap();
        for i in 0..n_test {
            pre += usize::from((pc.lower[i]..=pc.upper[i]).contains(&test[i]));
            conf += usize::from((cf.lower[i]..=cf.upper[i]).contains(&test[i]));
        }
        total += n_test;
    }
    let (pre_rate, conf_rate) = (pre as f64 / total as f64, conf as f64 / total as f64);
    outcome(
        (0.80..=0.92).contains(&pre_rate) && conf_rate >= 0.88,
        format!("pre-control {:.1}%, conformal {:.1}%", 100.0 * pre_rate, 100.0 * conf_rate),
    )
}

fn run_cli(dir: &Path, threads: &str, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_epicast"))
        .args(args)
        .env("RAYON_NUM_THREADS", threads)
        .current_dir(dir)
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data: String = std::iter::once("week,value".to_string())
        .chain((0..120).map(|t| {
            let v = 40.0 + 15.0 * (t as f64 * 0.3).sin() + ((t * 37) % 11) as f64;
            format!("{t},{v}")
        }))
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(dir.path().join("cases.csv"), data + "\n").unwrap();

    let mut outputs = Vec::new();
    for (run, threads) in [("a", "1"), ("b", "4")] {
        let ok = run_cli(
            dir.path(),
            threads,
            &["fit", "--data", "cases.csv", "--seed", "17", "--horizon", "6", "--p-grid", "1-4", "--out", run],
        ) && run_cli(
            dir.path(),
            threads,
            &["forecast", "--model", &format!("{run}/model.json"), "--interval", "conformal", "--out", run],
        );
        if !ok {
            return outcome(false, format!("CLI run {run} failed"));
        }
        let read = |f: &str| std::fs::read(dir.path().join(run).join(f)).unwrap();
        outputs.push((read("model.json"), read("forecast.csv")));
    }
    let same = outputs[0] == outputs[1];
    outcome(same, if same { "model.json and forecast.csv identical (1 vs 4 threads)" } else { "outputs differ" })
}

/// Two-sided p-value by listing every sign pattern.
fn brute_force_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= w_plus + 1e-9 {
            le += 1;
        }
        if w >= w_plus - 1e-9 {
            ge += 1;
        }
    }
    let all = (1u64 << n) as f64;
    (2.0 * (le.min(ge) as f64) / all).min(1.0)
}

fn wilcoxon_validity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..300 {
        let n = rng.random_range(1..=12);
        // coarse magnitudes force ties
        let mags: Vec<f64> = (0..n).map(|_| rng.random_range(1..6) as f64).collect();
        let ranks = midranks(&mags);
        let signs: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let w_plus: f64 = ranks.iter().zip(&signs).filter(|(_, s)| **s).map(|(r, _)| r).sum();
        worst = worst.max((wilcoxon_exact_p(&ranks, w_plus) - brute_force_p(&ranks, w_plus)).abs());
    }
    let sims = 1000;
    let se = (DEFAULT_ALPHA * (1.0 - DEFAULT_ALPHA) / sims as f64).sqrt();
    let mut sizes = Vec::new();
    for n in [15usize, 40] {
        let mut rejections = 0;
        for _ in 0..sims {
            let a: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let r = wilcoxon_signed_rank(&a, &b, DEFAULT_ALPHA).unwrap();
            rejections += usize::from(r.p_value < DEFAULT_ALPHA);
        }
        sizes.push(rejections as f64 / sims as f64);
    }
    let size_ok = sizes.iter().all(|s| (s - DEFAULT_ALPHA).abs() <= 2.0 * se);
    outcome(
        worst <= 1e-12 && size_ok,
        format!("exact vs enumeration {worst:.1e}; size {:.3} (n=15), {:.3} (n=40)", sizes[0], sizes[1]),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("perfect reconstruction", reconstruction),
        ("circulant oracle equivalence", oracle_equivalence),
        ("filter invariants", filter_invariants),
        ("gradient check", gradient_check),
        ("hidden neuron rule", neuron_rule),
        ("Iman-Davenport reproduction", statistic_reproduction),
        ("metric correctness", metric_correctness),
        ("forecast sanity vs random walk", forecast_sanity),
        ("interval calibration", interval_calibration),
        ("CLI determinism", determinism),
        ("Wilcoxon validity", wilcoxon_validity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
