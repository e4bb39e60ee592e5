use std::time::{Duration, Instant};

use evosteer::diffusion::{forward_noise, forward_noise_with, NoiseSchedule};
use evosteer::numerics::{softmax, Activation, DiagGmm, Mlp, RngStream};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

fn direct_softmax(s: &[f64], tau: f64) -> Vec<f64> {
    let e: Vec<f64> = s.iter().map(|x| (tau * x).exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|x| x / z).collect()
}

#[test]
fn softmax_matches_direct_evaluation() {
    let start = Instant::now();
    let mut rng = RngStream::new(11, 0);
    for _ in 0..1000 {
        let m = 1 + rng.below(64);
        let tau = 0.1 + 9.9 * rng.uniform();
        let s: Vec<f64> = (0..m).map(|_| 10.0 * (2.0 * rng.uniform() - 1.0)).collect();
        let got = softmax(&s, tau).unwrap();
        let want = direct_softmax(&s, tau);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-9, "{g} vs {w}");
        }
    }
    assert!(start.elapsed() < Duration::from_secs(10));
}

#[test]
fn forward_noise_hand_examples() {
    // sqrt(0.64) = 0.8, sqrt(0.36) = 0.6
    let x = forward_noise_with(&[1.0, 2.0], 0.64, &[0.5, -1.0]);
    assert!((x[0] - 1.1).abs() <= 1e-12);
    assert!((x[1] - 1.0).abs() <= 1e-12);
    let x = forward_noise_with(&[-3.0], 0.25, &[2.0]);
    assert!((x[0] - (-1.5 + 0.75f64.sqrt() * 2.0)).abs() <= 1e-12);
    assert_eq!(
        forward_noise_with(&[0.3, -0.7], 1.0, &[9.0, 9.0]),
        vec![0.3, -0.7]
    );

    // the sampled version draws its noise from the given stream
    let s = NoiseSchedule::from_betas(vec![0.1, 0.2]).unwrap();
    let eps = RngStream::new(4, 9).gauss(2);
    let got = forward_noise(&[1.0, -1.0], 2, &s, &mut RngStream::new(4, 9)).unwrap();
    let ab: f64 = 0.72;
    for i in 0..2 {
        let want = ab.sqrt() * [1.0, -1.0][i] + (1.0 - ab).sqrt() * eps[i];
        assert!((got[i] - want).abs() <= 1e-12);
    }
}

#[test]
fn schedule_products_exact() {
    let s = NoiseSchedule::from_betas(vec![0.1, 0.2, 0.5]).unwrap();
    let want = [0.9, 0.72, 0.36];
    for (t, w) in want.iter().enumerate() {
        assert!((s.alpha_bar(t + 1) - w).abs() <= 1e-12);
    }
    assert_eq!(s.alpha_bar(0), 1.0);

    // independent oracle through log-sums
    let s = NoiseSchedule::linear(50, 1e-4, 0.1).unwrap();
    let mut log_sum = 0.0;
    for t in 1..=50 {
        let b = 1e-4 + (0.1 - 1e-4) * (t - 1) as f64 / 49.0;
        assert!((s.beta(t) - b).abs() <= 1e-15);
        log_sum += (1.0 - b).ln();
        assert!((s.alpha_bar(t) - log_sum.exp()).abs() <= 1e-12, "t={t}");
    }
}

#[test]
fn gradient_check_on_random_nets() {
    let start = Instant::now();
    let acts = [Activation::Tanh, Activation::Relu, Activation::Identity];
    let mut worst: f64 = 0.0;
    for k in 0..50u64 {
        let mut rng = RngStream::new(2024, k);
        let depth = 1 + rng.below(3);
        let mut sizes = vec![1 + rng.below(4)];
        for _ in 0..depth {
            sizes.push(2 + rng.below(5));
        }
        sizes.push(1 + rng.below(3));
        let mut net = Mlp::new(&sizes, acts[k as usize % 3], &mut rng).unwrap();
        for p in net.params_mut() {
            for v in p.iter_mut() {
                *v += 0.3 * (2.0 * rng.uniform() - 1.0);
            }
        }
        let x: Vec<f64> = (0..sizes[0]).map(|_| 2.0 * rng.uniform() - 1.0).collect();
        let g: Vec<f64> = (0..*sizes.last().unwrap())
            .map(|_| 2.0 * rng.uniform() - 1.0)
            .collect();
        let loss = |n: &Mlp| -> f64 { n.forward(&x).unwrap().iter().zip(&g).map(|(y, g)| y * g).sum() };

        let analytic: Vec<Vec<f64>> = net
            .backward(&x, &g)
            .unwrap()
            .slices()
            .iter()
            .map(|s| s.to_vec())
            .collect();
        let h = 1e-6;
        for (pi, grads) in analytic.iter().enumerate() {
            for (j, &a) in grads.iter().enumerate() {
                let mut plus = net.clone();
                plus.params_mut()[pi][j] += h;
                let mut minus = net.clone();
                minus.params_mut()[pi][j] -= h;
                let n = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let scale = a.abs().max(n.abs());
                if scale > 1e-7 {
                    let rel = (a - n).abs() / scale;
                    worst = worst.max(rel);
                    assert!(rel < 1e-4, "net {k} tensor {pi} entry {j}: {a} vs {n}");
                } else {
                    assert!((a - n).abs() < 1e-9);
                }
            }
        }
    }
    assert!(start.elapsed() < Duration::from_secs(30));
    eprintln!("worst relative error {worst:e}");
}

#[test]
fn uniform_passes_chi_square() {
    let bins = 20;
    let n = 100_000;
    let mut counts = vec![0usize; bins];
    let mut rng = RngStream::new(7, 3);
    for _ in 0..n {
        counts[(rng.uniform() * bins as f64) as usize] += 1;
    }
    let e = n as f64 / bins as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat);
    assert!(p > 1e-4, "chi-square {stat}, p = {p}");
}

#[test]
fn gauss_passes_binned_chi_square() {
    // equiprobable bins under N(0, 1)
    let bins = 16;
    let norm = Normal::new(0.0, 1.0).unwrap();
    let edges: Vec<f64> = (1..bins)
        .map(|i| norm.inverse_cdf(i as f64 / bins as f64))
        .collect();
    let n = 64_000;
    let mut counts = vec![0usize; bins];
    for x in RngStream::new(8, 1).gauss(n) {
        counts[edges.partition_point(|&e| e < x)] += 1;
    }
    let e = n as f64 / bins as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat);
    assert!(p > 1e-4, "chi-square {stat}, p = {p}");
}

#[test]
fn gmm_logpdf_matches_closed_form() {
    let g = DiagGmm::new(
        vec![vec![-1.0, 0.0], vec![1.0, 0.5]],
        vec![vec![0.01, 0.04], vec![0.09, 0.01]],
        vec![0.25, 0.75],
    )
    .unwrap();
    let x = [0.2, 0.1];
    let comp = |m: [f64; 2], v: [f64; 2]| -> f64 {
        let mut p = 1.0;
        for i in 0..2 {
            p *= (-(x[i] - m[i]).powi(2) / (2.0 * v[i])).exp() / (2.0 * std::f64::consts::PI * v[i]).sqrt();
        }
        p
    };
    let want = (0.25 * comp([-1.0, 0.0], [0.01, 0.04]) + 0.75 * comp([1.0, 0.5], [0.09, 0.01])).ln();
    assert!((g.logpdf(&x).unwrap() - want).abs() < 1e-9);
}

#[test]
fn gmm_sampler_matches_component_moments() {
    let g = DiagGmm::isotropic(vec![vec![-1.0, 0.0], vec![1.0, 0.0]], 0.1).unwrap();
    let mut rng = RngStream::new(3, 3);
    let n = 20_000;
    let xs: Vec<Vec<f64>> = (0..n).map(|_| g.sample(&mut rng)).collect();
    let left = xs.iter().filter(|x| x[0] < 0.0).count() as f64 / n as f64;
    // binomial stderr is about 0.0035
    assert!((left - 0.5).abs() < 0.02, "{left}");
    let ys: Vec<f64> = xs.iter().map(|x| x[1]).collect();
    let var = ys.iter().map(|y| y * y).sum::<f64>() / n as f64;
    assert!((var - 0.01).abs() < 0.001, "{var}");
}
