use gibbsline_core::bridge::{BridgeSampler, BridgeSpec, HrwSpec};
use gibbsline_core::coupling::{
    conditional_cdf, order_points, BoundaryTriple, CellCdf, CouplingModel, CouplingParams,
    CouplingUniforms,
};
use gibbsline_core::gibbs::{EnsembleSpec, GibbsSampler, Hamiltonian, InteractionSpec};
use gibbsline_core::stats::{ks_distance, EmpiricalCdf};
use gibbsline_core::{rng_for, DiscreteLineEnsemble, Theta};

fn log_gamma() -> HrwSpec {
    HrwSpec::log_gamma(Theta::new(1.0).unwrap())
}

fn boundary() -> BoundaryTriple {
    BoundaryTriple::new(
        vec![0.0, -1.0],
        vec![0.5, -1.5],
        vec![-3.0, -2.5, -2.0, -3.5, -3.0],
    )
    .unwrap()
}

#[test]
fn marginals_match_rejection_sampler() {
    let (k, t) = (2, 5);
    let inter = InteractionSpec::uniform(Hamiltonian::Exp, 0, t as i64 - 1).unwrap();
    let model =
        CouplingModel::new(log_gamma(), inter.clone(), k, t, CouplingParams::default()).unwrap();
    let b = boundary();
    let plan = model.plan(&b).unwrap();
    let spec = EnsembleSpec::new(
        1,
        2,
        0,
        t as i64 - 1,
        b.x.clone(),
        b.y.clone(),
        vec![f64::INFINITY; t],
        b.z.clone(),
        log_gamma(),
        inter,
    )
    .unwrap();
    let gibbs = GibbsSampler::new(spec).unwrap();
    let n = 5000;
    let mut rc = rng_for(41, 0);
    let mut rg = rng_for(41, 1);
    let mut coupled = vec![Vec::new(); 6];
    let mut exact = vec![Vec::new(); 6];
    for _ in 0..n {
        let e = plan
            .sample(&CouplingUniforms::sample(k * (t - 2), &mut rc))
            .unwrap();
        let r = gibbs.sample_rejection(&mut rg).unwrap().ensemble;
        for (s, (i, j)) in [(1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3)]
            .into_iter()
            .enumerate()
        {
            coupled[s].push(e.at(i, j));
            exact[s].push(r.at(i, j));
        }
    }
    for s in 0..6 {
        let d = ks_distance(
            &EmpiricalCdf::new(coupled[s].clone()).unwrap(),
            &EmpiricalCdf::new(exact[s].clone()).unwrap(),
        );
        assert!(d < 0.05, "site {s}: KS {d}");
    }
}

#[test]
fn free_boundary_gives_independent_bridges() {
    let (k, t) = (1, 6);
    let inter = InteractionSpec::uniform(Hamiltonian::Zero, 0, t as i64 - 1).unwrap();
    let model = CouplingModel::new(log_gamma(), inter, k, t, CouplingParams::default()).unwrap();
    let b = BoundaryTriple::free(vec![0.5], vec![-1.0], t).unwrap();
    let plan = model.plan(&b).unwrap();
    let bridges = BridgeSampler::new(&log_gamma(), t).unwrap();
    let spec = BridgeSpec::new(0, t as i64 - 1, 0.5, -1.0, log_gamma()).unwrap();
    let n = 4000;
    let mut rc = rng_for(43, 0);
    let mut rb = rng_for(43, 1);
    let mut a = Vec::new();
    let mut c = Vec::new();
    for _ in 0..n {
        a.push(
            plan.sample(&CouplingUniforms::sample(t - 2, &mut rc))
                .unwrap()
                .at(1, 2),
        );
        c.push(bridges.sample(&spec, &mut rb).unwrap()[2]);
    }
    let d = ks_distance(
        &EmpiricalCdf::new(a).unwrap(),
        &EmpiricalCdf::new(c).unwrap(),
    );
    assert!(d < 0.05, "KS {d}");
}

#[test]
fn conditional_cdf_is_stable_under_refinement() {
    let (k, t) = (2, 5);
    let inter = InteractionSpec::uniform(Hamiltonian::Exp, 0, t as i64 - 1).unwrap();
    let coarse = CouplingModel::new(
        log_gamma(),
        inter,
        k,
        t,
        CouplingParams {
            grid_points: 1024,
            ..Default::default()
        },
    )
    .unwrap();
    let fine = coarse.refined(2).unwrap();
    let b = boundary();
    let fixed = DiscreteLineEnsemble::from_rows(
        1,
        0,
        &[
            vec![0.0, 0.3, 0.2, 0.6, 0.5],
            vec![-1.0, -1.2, -0.8, -1.1, -1.5],
        ],
    )
    .unwrap();
    let order = order_points(k, t).unwrap();
    for m in [1, 3, 4, 6] {
        let dc = coarse.conditional_density(&b, &fixed, m).unwrap();
        let df = fine.conditional_density(&b, &fixed, m).unwrap();
        let (fc, ff) = (CellCdf::new(&dc).unwrap(), CellCdf::new(&df).unwrap());
        let mut worst = 0.0_f64;
        for i in 0..2000 {
            let s = dc.lo() + (dc.hi() - dc.lo()) * i as f64 / 1999.0;
            worst = worst.max((fc.eval(s) - ff.eval(s)).abs());
        }
        assert!(
            worst <= 1e-4,
            "point {:?}: sup CDF change {worst}",
            order.point(m)
        );
        assert!((conditional_cdf(&dc, dc.hi()).unwrap() - 1.0).abs() < 1e-10);
    }
}
