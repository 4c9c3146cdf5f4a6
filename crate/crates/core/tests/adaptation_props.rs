mod common;

use common::{agent, random_requirement, subtask};
use hiercoord::resources::{loss_gradient, task_loss, update_capability, AdaptationParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-5;
    for _ in 0..100 {
        let dims = rng.random_range(1..=8);
        let e: Vec<f64> = (0..dims).map(|_| rng.random_range(0.05..0.95)).collect();
        let st = subtask(0, 0, random_requirement(&mut rng, dims), 1.0);
        let a = agent(0, e.clone(), 0.0);
        let grad = loss_gradient(&a, &st).unwrap();
        for k in 0..dims {
            let mut up = e.clone();
            up[k] += h;
            let mut down = e.clone();
            down[k] -= h;
            let fd = (task_loss(&agent(0, up, 0.0), &st).unwrap() - task_loss(&agent(0, down, 0.0), &st).unwrap()) / (2.0 * h);
            assert!((fd - grad[k]).abs() < 1e-6, "k={k} fd={fd} analytic={}", grad[k]);
        }
    }
}

proptest! {
    #[test]
    fn descent_step_never_increases_loss(
        e in prop::collection::vec(0.0f64..=1.0, 4),
        r in prop::collection::vec(0.0f64..=1.0, 4),
        eta in 0.0f64..=0.25,
    ) {
        prop_assume!(r.iter().any(|&x| x > 0.0));
        let st = subtask(0, 0, r, 1.0);
        let mut a = agent(0, e, 0.0);
        let before = task_loss(&a, &st).unwrap();
        update_capability(&mut a, &st, &AdaptationParams::new(eta, 0.0).unwrap()).unwrap();
        prop_assert!(task_loss(&a, &st).unwrap() <= before + 1e-15);
        prop_assert!(a.expertise().iter().all(|&x| (0.0..=1.0).contains(&x)));
    }
}

#[test]
fn repeated_steps_converge_on_required_domains() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = AdaptationParams::new(0.1, 0.0).unwrap();
    for _ in 0..50 {
        let dims = 6;
        let e: Vec<f64> = (0..dims).map(|_| rng.random()).collect();
        let st = subtask(0, 0, random_requirement(&mut rng, dims), 1.0);
        let mut a = agent(0, e.clone(), 0.0);
        for _ in 0..50 {
            update_capability(&mut a, &st, &params).unwrap();
        }
        for k in 0..dims {
            if st.requirement[k] > 0.0 {
                assert!((a.expertise()[k] - st.requirement[k]).abs() < 1e-3);
            } else {
                assert_eq!(a.expertise()[k], e[k]);
            }
        }
    }
}
