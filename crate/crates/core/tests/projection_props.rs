use nalgebra::DVector;
use proptest::prelude::*;

use sepfista::projection::{
    project_knapsack_with, project_omega, project_product_cone_flat, project_soc, KnapsackMethod,
};
use sepfista::{DualPoint, KnapsackProblem, SocPoint};

fn soc_point_of_dim(d: usize) -> impl Strategy<Value = SocPoint> {
    (-5.0..5.0f64, prop::collection::vec(-5.0..5.0f64, d)).prop_map(|(h, t)| SocPoint::new(h, DVector::from_vec(t)))
}

fn soc_point(max_dim: usize) -> impl Strategy<Value = SocPoint> {
    (1..=max_dim).prop_flat_map(soc_point_of_dim)
}

fn soc_pair(max_dim: usize) -> impl Strategy<Value = (SocPoint, SocPoint)> {
    (1..=max_dim).prop_flat_map(|d| (soc_point_of_dim(d), soc_point_of_dim(d)))
}

fn flat(p: &SocPoint) -> DVector<f64> {
    let mut v = DVector::zeros(p.dim() + 1);
    v[0] = p.head;
    v.rows_mut(1, p.dim()).copy_from(&p.tail);
    v
}

fn knapsack() -> impl Strategy<Value = KnapsackProblem> {
    (1usize..=20).prop_flat_map(|n| {
        (
            prop::collection::vec(-4.0..4.0f64, n),
            prop::collection::vec(-2.0..1.0f64, n),
            prop::collection::vec(0.0..2.0f64, n),
            0.0..=1.0f64,
        )
            .prop_map(|(q, lo, width, frac)| {
                let hi: Vec<f64> = lo.iter().zip(&width).map(|(l, w)| l + w).collect();
                let (sl, su): (f64, f64) = (lo.iter().sum(), hi.iter().sum());
                KnapsackProblem::new(q, lo, hi, sl + frac * (su - sl)).unwrap()
            })
    })
}

fn omega_input() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    (1usize..10, 1usize..10, 0.05..2.0f64).prop_flat_map(|(j, l, g)| {
        (
            prop::collection::vec(-2.0..3.0f64, j),
            prop::collection::vec(-2.0..3.0f64, l),
            Just(g),
        )
    })
}

proptest! {
    #[test]
    fn soc_projection_lands_in_cone_and_is_idempotent(p in soc_point(10)) {
        let q = project_soc(&p);
        prop_assert!(q.tail.norm() <= q.head * (1.0 + 1e-12) + 1e-12);
        let again = project_soc(&q);
        prop_assert!((flat(&again) - flat(&q)).amax() <= 1e-12 * (1.0 + flat(&q).amax()));
    }

    #[test]
    fn soc_projection_is_nonexpansive((a, b) in soc_pair(6)) {
        let (pa, pb) = (project_soc(&a), project_soc(&b));
        prop_assert!((flat(&pa) - flat(&pb)).norm() <= (flat(&a) - flat(&b)).norm() + 1e-12);
    }

    #[test]
    fn soc_moreau_decomposition(p in soc_point(8)) {
        // z = P(z) - P(-z) with the two parts orthogonal (the cone is self-dual)
        let z = flat(&p);
        let pos = flat(&project_soc(&p));
        let neg = flat(&project_soc(&SocPoint::new(-p.head, -&p.tail)));
        prop_assert!((&pos - &neg - &z).amax() <= 1e-12 * (1.0 + z.amax()));
        prop_assert!(pos.dot(&neg).abs() <= 1e-10 * (1.0 + z.norm_squared()));
    }

    #[test]
    fn soc_variational_inequality((p, other) in soc_pair(5)) {
        let proj = flat(&project_soc(&p));
        let q = flat(&project_soc(&other));
        prop_assert!((flat(&p) - &proj).dot(&(q - &proj)) <= 1e-10 * (1.0 + flat(&p).norm_squared()));
    }

    #[test]
    fn product_cone_projects_blockwise(blocks in prop::collection::vec(soc_point_of_dim(3), 1..5)) {
        let mut x: Vec<f64> = blocks.iter().flat_map(|b| flat(b).iter().copied().collect::<Vec<_>>()).collect();
        project_product_cone_flat(&mut x, 4);
        for (i, b) in blocks.iter().enumerate() {
            let expect = flat(&project_soc(b));
            prop_assert_eq!(&x[4 * i..4 * i + 4], expect.as_slice());
        }
    }

    #[test]
    fn knapsack_solution_is_feasible_and_methods_agree(kp in knapsack()) {
        let sort = project_knapsack_with(&kp, KnapsackMethod::Sort).unwrap();
        let median = project_knapsack_with(&kp, KnapsackMethod::Median).unwrap();
        let scale = 1.0 + kp.target.abs() + kp.q.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!((sort.r.iter().sum::<f64>() - kp.target).abs() <= 1e-10 * scale * kp.len() as f64);
        for i in 0..kp.len() {
            prop_assert!(kp.lower[i] <= sort.r[i] && sort.r[i] <= kp.upper[i]);
            prop_assert!((sort.r[i] - median.r[i]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn knapsack_variational_inequality(kp in knapsack(), t in 0.0..=1.0f64) {
        // any other feasible point: a convex combination of the solution with a
        // feasible point built from the bounds
        let sol = project_knapsack_with(&kp, KnapsackMethod::Sort).unwrap().r;
        let n = kp.len();
        let (sl, su): (f64, f64) = (kp.lower.iter().sum(), kp.upper.iter().sum());
        let frac = if su > sl { (kp.target - sl) / (su - sl) } else { 0.0 };
        let other: Vec<f64> = (0..n).map(|i| kp.lower[i] + frac * (kp.upper[i] - kp.lower[i])).collect();
        let y: Vec<f64> = (0..n).map(|i| t * other[i] + (1.0 - t) * sol[i]).collect();
        let ip: f64 = (0..n).map(|i| (kp.q[i] - sol[i]) * (y[i] - sol[i])).sum();
        prop_assert!(ip <= 1e-9);
    }

    #[test]
    fn knapsack_is_idempotent(kp in knapsack()) {
        let sol = project_knapsack_with(&kp, KnapsackMethod::Sort).unwrap().r;
        let again = KnapsackProblem::new(sol.clone(), kp.lower.clone(), kp.upper.clone(), kp.target).unwrap();
        let twice = project_knapsack_with(&again, KnapsackMethod::Median).unwrap().r;
        for (a, b) in sol.iter().zip(&twice) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn omega_projection_is_feasible_and_nonexpansive((x, y, g) in omega_input(), shift in -1.0..1.0f64) {
        let (u, v) = project_omega(&x, &y, g);
        let p = DualPoint { u: DVector::from_vec(u.clone()), v: DVector::from_vec(v.clone()) };
        prop_assert!(p.in_omega(g));
        let (x2, y2): (Vec<f64>, Vec<f64>) = (x.iter().map(|a| a + shift).collect(), y.to_vec());
        let (u2, v2) = project_omega(&x2, &y2, g);
        let d_out: f64 = u.iter().zip(&u2).chain(v.iter().zip(&v2)).map(|(a, b)| (a - b).powi(2)).sum();
        let d_in = shift * shift * x.len() as f64;
        prop_assert!(d_out.sqrt() <= d_in.sqrt() + 1e-12);
        let (u3, v3) = project_omega(&u, &v, g);
        prop_assert!(u3.iter().zip(&u).chain(v3.iter().zip(&v)).all(|(a, b)| (a - b).abs() <= 1e-12));
    }
}
