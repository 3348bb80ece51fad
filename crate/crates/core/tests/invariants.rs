use pdebet::betting::{play_game, rademacher_adversary, AdversaryPolicy, PlayerPolicy};
use pdebet::olo::{
    conjugate_regret_bound, ogd_ball_step, run_online, Algorithm, Learner, LearnerConfig,
    OloState1d, ScalarLearner,
};
use pdebet::potentials::{analytic_derivatives, fenchel_conjugate, perturbation};
use pdebet::Potential;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn stock() -> [Potential; 3] {
    [
        Potential::ogd(1.0).unwrap(),
        Potential::exp(1.0).unwrap(),
        Potential::erfi(1.0).unwrap(),
    ]
}

#[test]
fn convex_in_coin_sum() {
    for p in stock() {
        for t in 1..=100 {
            let tf = t as f64;
            let mut s = -tf;
            while s <= tf {
                let second = p.value(tf, s + 0.25).unwrap() + p.value(tf, s - 0.25).unwrap()
                    - 2.0 * p.value(tf, s).unwrap();
                assert!(second >= -1e-10, "{:?} t={t} s={s}", p.kind());
                s += 0.25;
            }
        }
    }
}

#[test]
fn erfi_slope_dominates_exp_slope() {
    let erfi = Potential::erfi(1.0).unwrap();
    let exp = Potential::exp(1.0).unwrap();
    for t in 1..=100 {
        let tf = t as f64;
        let mut s = -(tf - 1.0);
        while s <= tf - 1.0 {
            assert!(erfi.d_s(tf, s).unwrap().abs() >= exp.d_s(tf, s).unwrap().abs());
            s += 0.5;
        }
    }
}

#[test]
fn erfi_far_field_lower_bound() {
    let erfi = Potential::erfi(1.0).unwrap();
    for t in 2..=100 {
        let tf = t as f64;
        let mut s = (2.0 * tf).sqrt();
        while s <= tf {
            let lower = tf.sqrt() * (tf / (s * s) * (s * s / (2.0 * tf)).exp() - 1.5);
            let v = erfi.value(tf, s).unwrap();
            assert!(v >= lower - 1e-12 * v.abs(), "t={t} s={s}");
            s += 0.5;
        }
    }
}

#[test]
fn second_derivative_of_erfi_is_exp() {
    for c in [0.5, 1.0, 3.0] {
        let erfi = Potential::erfi(c).unwrap();
        let exp = Potential::exp(c).unwrap();
        for t in 1..=100 {
            let tf = t as f64;
            let reach = (10.0 * tf).sqrt();
            for i in -20..=20 {
                let s = reach * i as f64 / 20.0;
                let d = analytic_derivatives(&erfi, tf, s).unwrap().d_ss;
                let v = exp.value(tf, s).unwrap();
                assert!((d - v).abs() <= 1e-9 * v);
            }
        }
    }
}

#[test]
fn exp_conjugate_bound() {
    // |w|√(T log(1 + T²w²/C²)) − C/√T; see the decisions ledger for why the
    // T² form is the one that holds.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let c: f64 = rng.gen_range(0.1..5.0);
        let t: f64 = rng.gen_range(1..500) as f64;
        let w: f64 = rng.gen_range(-50.0..50.0);
        let p = Potential::exp(c).unwrap();
        let conj = fenchel_conjugate(&p, t, w).unwrap();
        let cap = w.abs() * (t * (t * t * w * w / (c * c)).ln_1p()).sqrt() - c / t.sqrt();
        assert!(conj <= cap + 1e-9 * (1.0 + cap.abs()), "c={c} t={t} w={w}");
    }
}

#[test]
fn ito_identity_on_random_walks() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in stock() {
        let player = PlayerPolicy::new(p.clone());
        for _ in 0..20 {
            let coins: Vec<f64> =
                (0..300).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
            let traj = play_game(&player, &AdversaryPolicy::Scripted(coins), 300).unwrap();
            let mut prev = (0.0f64, 0.0f64);
            for r in &traj.rounds {
                let t = r.t as f64;
                let lhs = p.value(t, r.coin_sum).unwrap()
                    - if r.t == 1 { 0.0 } else { p.value(t - 1.0, prev.1).unwrap() };
                let rhs = r.coin * r.bet + perturbation(&p, t, prev.1).unwrap();
                let scale = 1.0 + p.value(t, r.coin_sum).unwrap().abs();
                assert!((lhs - rhs).abs() <= 1e-9 * scale);
                prev = (t, r.coin_sum);
            }
        }
    }
}

#[test]
fn fractional_coins_give_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let p = Potential::erfi(1.0).unwrap();
    let coins: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let traj = play_game(&PlayerPolicy::new(p.clone()), &AdversaryPolicy::Scripted(coins), 200)
        .unwrap();
    let mut s_prev = 0.0;
    for r in &traj.rounds {
        let t = r.t as f64;
        let before = if r.t == 1 { 0.0 } else { p.value(t - 1.0, s_prev).unwrap() };
        let lhs = p.value(t, r.coin_sum).unwrap() - before;
        let rhs = r.coin * r.bet + perturbation(&p, t, s_prev).unwrap();
        assert!(lhs <= rhs + 1e-9);
        s_prev = r.coin_sum;
    }
}

#[test]
fn state_is_sufficient() {
    let p = Potential::erfi(2.0).unwrap();
    let traj = play_game(&PlayerPolicy::new(p.clone()), &rademacher_adversary(3), 500).unwrap();
    let coins = &traj.state.coins;
    for t in 0..coins.len() {
        let from_history: f64 = coins[..t].iter().sum();
        let bet = pdebet::betting::player_bet(&p, t as u64 + 1, from_history).unwrap();
        assert_eq!(bet.amount.to_bits(), traj.rounds[t].bet.to_bits());
    }
}

#[test]
fn trajectory_csv() {
    let traj = play_game(
        &PlayerPolicy::new(Potential::ogd(1.0).unwrap()),
        &AdversaryPolicy::Scripted(vec![1.0, -0.5]),
        2,
    )
    .unwrap();
    let mut out = Vec::new();
    traj.write_csv(&mut out).unwrap();
    assert_eq!(
        String::from_utf8(out).unwrap(),
        "t,bet,coin,coin_sum,wealth\n1,0,1,1,0\n2,2,-0.5,0.5,-1\n"
    );
}

#[test]
fn erfi_regret_below_conjugate() {
    let erfi = Potential::erfi(1.0).unwrap();
    let horizon = 400;
    let streams: Vec<Box<dyn Fn(u64, f64) -> f64>> = vec![
        Box::new(|_, x| if x >= 7.0 { 1.0 } else { -1.0 }),
        Box::new(|_, x| if x >= -40.0 { 1.0 } else { -1.0 }),
        Box::new(|t, _| if t % 3 == 0 { 1.0 } else { -1.0 }),
        Box::new(|t, _| ((t as f64) * 0.37).sin()),
    ];
    for g in &streams {
        let mut learner = OloState1d::new(erfi.clone());
        let mut loss = 0.0;
        let mut gsum = 0.0;
        for t in 1..=horizon {
            let x = learner.predict().unwrap();
            let gt = g(t, x);
            learner.update(gt).unwrap();
            loss += gt * x;
            gsum += gt;
        }
        for u in -100..=100 {
            let u = u as f64;
            let regret = loss - gsum * u;
            let conj = conjugate_regret_bound(&erfi, horizon, u.abs()).unwrap();
            assert!(regret <= conj + 1e-6, "u={u} regret={regret} conj={conj}");
        }
    }
}

#[test]
fn direction_learner_regret() {
    let horizon = 2000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..10 {
        let mut z = vec![0.0; 4];
        let mut loss = 0.0;
        let mut gsum = vec![0.0; 4];
        let bias: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for t in 1..=horizon {
            let mut g: Vec<f64> = bias.iter().map(|b| b + rng.gen_range(-1.0..1.0)).collect();
            let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            g.iter_mut().for_each(|v| *v /= n);
            loss += g.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
            gsum.iter_mut().zip(&g).for_each(|(s, v)| *s += v);
            z = ogd_ball_step(&z, &g, t);
            assert!(z.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1.0 + 1e-15);
        }
        // the best unit comparator is −Σg/‖Σg‖
        let best = gsum.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(loss + best <= (2.0 * horizon as f64).sqrt() + 1e-6);
    }
}

#[test]
fn reduction_regret_bound() {
    let erfi = Potential::erfi(1.0).unwrap();
    let horizon = 300u64;
    let d = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for run in 0..6 {
        let mut learner = LearnerConfig::new(Algorithm::Erfi, 1.0, d).build().unwrap();
        let target: Vec<f64> = (0..d).map(|_| rng.gen_range(-20.0..20.0)).collect();
        let ledger = run_online(learner.as_mut(), horizon, |t, x| {
            // absolute-loss gradient toward a far target, or a rotating unit vector
            let mut g: Vec<f64> = if run % 2 == 0 {
                x.iter().zip(&target).map(|(a, b)| a - b).collect()
            } else {
                (0..d).map(|i| ((t as f64) * 0.3 + i as f64).cos()).collect()
            };
            let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n == 0.0 {
                g = vec![0.0; d];
                g[0] = 1.0;
            } else {
                g.iter_mut().for_each(|v| *v /= n);
            }
            g
        })
        .unwrap();
        for _ in 0..50 {
            let scale = rng.gen_range(0.0..60.0);
            let mut u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            u.iter_mut().for_each(|v| *v *= scale / n);
            let bound = conjugate_regret_bound(&erfi, horizon, scale).unwrap()
                + scale * (2.0 * horizon as f64).sqrt();
            assert!(ledger.regret(&u).unwrap() <= bound + 1e-6);
        }
    }
}

#[test]
fn kt_wealth_term_matches_ledger() {
    let mut learner = pdebet::olo::KtState::new(0.5f64.exp()).unwrap();
    let mut loss = 0.0;
    for t in 1..=1000u64 {
        let x = learner.predict().unwrap();
        let g = if (t * 2654435761) % 7 < 3 { 1.0 } else { -1.0 };
        learner.update(g).unwrap();
        loss += g * x;
    }
    assert_eq!(learner.wealth_term, 0.5f64.exp() - loss);
}

#[test]
fn learners_are_send() {
    fn check<T: Send>(_: &T) {}
    let l: Box<dyn Learner + Send> = LearnerConfig::new(Algorithm::Kt, 1.0, 3).build().unwrap();
    check(&l);
}
