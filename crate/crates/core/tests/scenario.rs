use optocool::config::tau_m;
use optocool::control::{Basis, OptimizeOptions};
use optocool::error::Error;
use optocool::scenario::{
    run_scenario, table_one, table_two, CellParams, CouplingSource, Label, Regime, RegimePair, ScenarioSpec,
    SweepSpec,
};

fn quick() -> OptimizeOptions {
    OptimizeOptions {
        n_starts: 2,
        max_iters: 40,
        basis: Basis::PiecewiseLinear { knots: 8 },
        ..OptimizeOptions::default()
    }
}

fn cell(gamma: f64, kappa: f64) -> CellParams {
    CellParams {
        gamma,
        kappa,
        t_cool: 0.55 * tau_m::<f64>(),
        n_t: 100.0,
        n_c: 0.0,
    }
}

fn spec(label: Label) -> ScenarioSpec {
    ScenarioSpec::standard(label, Regime::markovian(), Regime::non_markovian())
}

fn sweep(gammas: &[f64], kappas: &[f64], t_cools: &[f64]) -> SweepSpec {
    SweepSpec {
        gamma_list: gammas.to_vec(),
        kappa_list: kappas.to_vec(),
        t_cool_list: t_cools.iter().map(|t| t * tau_m::<f64>()).collect(),
        n_t: 100.0,
        n_c: 0.0,
        options: quick(),
        markovian: Regime::markovian(),
        non_markovian: Regime::non_markovian(),
    }
}

#[test]
fn standard_mapping() {
    let m = Regime::markovian();
    let nm = Regime::non_markovian();
    assert_eq!(m.cutoff, 100.0);
    assert_eq!(nm.cutoff, 1.0);
    assert_eq!(spec(Label::I).source, CouplingSource::Optimize(RegimePair::new(m, m)));
    assert_eq!(spec(Label::II).source, CouplingSource::ReuseFrom(Label::I));
    assert_eq!(spec(Label::II).eval, RegimePair::new(nm, nm));
    assert_eq!(spec(Label::IV).eval, RegimePair::new(nm, m));
    assert_eq!(spec(Label::V).source, CouplingSource::Optimize(RegimePair::new(nm, m)));
    assert!(Regime::new(optocool::scenario::RegimeKind::Markovian, 0.0).is_err());
}

#[test]
fn degenerate_reuse_reproduces_the_source() {
    let p = cell(1e-3, 1e-2);
    let first = run_scenario(&spec(Label::I), &p, &quick(), None).unwrap();
    let mut degenerate = spec(Label::II);
    degenerate.eval = spec(Label::I).eval;
    let again = run_scenario(&degenerate, &p, &quick(), Some(&first)).unwrap();
    assert_eq!(again.n_final.to_bits(), first.n_final.to_bits());
    assert_eq!(again.coupling, first.coupling);
}

#[test]
fn reuse_without_source_is_an_error() {
    let p = cell(1e-3, 1e-2);
    let err = run_scenario(&spec(Label::IV), &p, &quick(), None).unwrap_err();
    assert!(matches!(err, Error::MissingReuseSource(_)));
    let other = run_scenario(&spec(Label::III), &p, &quick(), None).unwrap();
    let err = run_scenario(&spec(Label::II), &p, &quick(), Some(&other)).unwrap_err();
    assert!(matches!(err, Error::MissingReuseSource(_)));
}

#[test]
fn provenance_rerun_is_bit_identical() {
    let p = cell(1e-4, 1e-3);
    let r = run_scenario(&spec(Label::V), &p, &quick(), None).unwrap();
    let prov = &r.provenance;
    let rerun_spec = ScenarioSpec {
        label: prov.label,
        source: prov.source,
        eval: prov.eval,
    };
    let again = run_scenario(&rerun_spec, &prov.params, &prov.options, None).unwrap();
    assert_eq!(again, r);
    assert!(prov.evaluation_count > 1);
    assert_eq!(prov.n_steps as f64 * prov.dt, p.t_cool);
}

#[test]
fn decoupled_mechanical_bath_leaves_only_the_cavity_regime() {
    let p = cell(0.0, 1e-2);
    let first = run_scenario(&spec(Label::I), &p, &quick(), None).unwrap();
    let iv = run_scenario(&spec(Label::IV), &p, &quick(), Some(&first)).unwrap();
    assert_eq!(iv.n_final.to_bits(), first.n_final.to_bits());
    let ii = run_scenario(&spec(Label::II), &p, &quick(), Some(&first)).unwrap();
    let mut cav_only = spec(Label::II);
    cav_only.eval.mech = Regime::markovian();
    let want = run_scenario(&cav_only, &p, &quick(), Some(&first)).unwrap();
    assert_eq!(ii.n_final.to_bits(), want.n_final.to_bits());
}

#[test]
fn table_one_reuses_and_orders_rows() {
    let t = table_one(&sweep(&[1e-4, 1e-3, 1e-2], &[1e-4], &[0.55])).unwrap();
    assert_eq!(t.columns, Label::ALL.to_vec());
    assert_eq!(t.rows.len(), 3);
    for (i, row) in t.rows.iter().enumerate() {
        let source = &t.cell(i, Label::I).unwrap().coupling;
        assert_eq!(&t.cell(i, Label::II).unwrap().coupling, source);
        assert_eq!(&t.cell(i, Label::IV).unwrap().coupling, source);
        assert_eq!(row.cells.len(), 5);
    }
    for label in Label::ALL {
        let col: Vec<f64> = (0..3).map(|i| t.cell(i, label).unwrap().n_final).collect();
        assert!(col.windows(2).all(|w| w[0] <= w[1]), "column {label}: {col:?}");
    }
    let csv = t.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "gamma,kappa,t_cool_over_tau_m,n_T,n_c,n_i,n_ii,n_iii,n_iv,n_v");
    assert_eq!(lines.count(), 3);
    let json: serde_json::Value = serde_json::from_str(&t.provenance_json("abc", 7)).unwrap();
    assert_eq!(json["seed"], 7);
    assert_eq!(json["config_sha256"], "abc");
    assert_eq!(json["cells"].as_array().unwrap().len(), 15);
}

#[test]
fn vanishing_cavity_loss_makes_the_cavity_regime_irrelevant() {
    let t = table_two(&sweep(&[1e-4], &[0.0], &[0.55])).unwrap();
    assert_eq!(t.columns, vec![Label::I, Label::III, Label::V]);
    let n = |l| t.cell(0, l).unwrap().n_final;
    assert_eq!(n(Label::III).to_bits(), n(Label::V).to_bits());
    assert!((n(Label::I) - n(Label::III)).abs() <= 0.25 * n(Label::III), "{} vs {}", n(Label::I), n(Label::III));
}

#[test]
fn sweep_validation() {
    assert!(table_one(&sweep(&[], &[1e-4], &[0.55])).is_err());
    assert!(table_one(&sweep(&[1e-4], &[1e-4, 1e-3], &[0.55])).is_err());
    assert!(table_two(&sweep(&[1e-4], &[1e-3], &[0.55, 1.6])).is_err());
    assert!(table_two(&sweep(&[1e-4], &[1e-3], &[-1.0])).is_err());
}
