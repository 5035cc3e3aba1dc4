use std::path::Path;

use super::config::{echo, echo_to_toml, parse_model, parse_study};
use super::*;
use crate::assembly::{Discretization, PhysicalParams};

fn small_model() -> ModelConfig {
    let kernel = PronyKernel::from_pairs(&[(1.0, 1.0), (8.0, 4.0)]).unwrap();
    ModelConfig {
        params: PhysicalParams {
            rho2: 0.6,
            k: 1.8,
            ..PhysicalParams::default()
        },
        law_theta: KernelSpec::GurtinPipkin { kernel: kernel.clone() },
        law_xi: KernelSpec::GurtinPipkin { kernel },
        discretization: Discretization { cells: 8, scheme: Scheme::P1P0 },
        ..ModelConfig::default()
    }
}

fn small(kind: StudyKind) -> StudySpec {
    let mut s = StudySpec::new(kind, small_model());
    s.seed = 7;
    s
}

#[test]
fn echo_round_trips_through_toml() {
    let mut models = vec![small_model(), ModelConfig::default()];
    let mut m = small_model();
    m.law_theta = KernelSpec::Cattaneo { tau: 0.3 };
    m.law_xi = KernelSpec::ColemanGurtin {
        ell: 0.25,
        kernel: PronyKernel::from_pairs(&[(2.0, 3.0)]).unwrap(),
    };
    m.bcs = BoundarySet::FullDirichlet;
    m.discretization.scheme = Scheme::P1;
    models.push(m);
    let mut f = ModelConfig::default();
    f.law_xi = KernelSpec::Fourier;
    f.thermal = false;
    models.push(f);
    for model in models {
        let text = echo_to_toml(&echo(&model)).unwrap();
        // The unit-mass flag is not part of the echo; compare echoes.
        assert_eq!(echo(&parse_model(&text).unwrap()), echo(&model), "{text}");
    }
}

#[test]
fn parses_a_nested_study_file() {
    let spec = parse_study(
        r#"
        bcs = "dirichlet"
        mesh.n = 16
        mesh.scheme = "p1"
        [params]
        rho1 = 2
        gamma = 0.5
        [law.theta]
        variant = "cattaneo"
        tau = 0.5
        [law.xi]
        variant = "cg"
        ell = 0.4
        kernel.terms = [[1, 2], [3, 4.5]]
        [study]
        kind = "sweep"
        seed = 11
        draws = 4
        bcs = ["mixed", "dirichlet"]
        sweep.k = [0.5, 2]
        "#,
    )
    .unwrap();
    assert_eq!(spec.kind, StudyKind::Sweep);
    assert_eq!(spec.seed, 11);
    assert_eq!(spec.model.params.rho1, 2.0);
    assert_eq!(spec.model.params.gamma, 0.5);
    assert_eq!(spec.model.law_theta, KernelSpec::Cattaneo { tau: 0.5 });
    assert_eq!(spec.model.discretization, Discretization { cells: 16, scheme: Scheme::P1 });
    assert_eq!(spec.sweep.draws, 4);
    assert_eq!(spec.sweep.ranges.len(), 1);
    assert_eq!(spec.bcs, BoundarySet::ALL.to_vec());
}

#[test]
fn config_errors_name_the_key() {
    let unknown = parse_study("params.rho9 = 1").unwrap_err();
    assert!(matches!(&unknown, Error::UnknownKey(k) if k == "params.rho9"));
    assert!(unknown.is_config_error());
    let cases = [
        ("mesh.n = \"many\"", "mesh.n"),
        ("law.theta.variant = \"cattaneo\"", "law.theta.tau"),
        ("law.theta.variant = \"fourier\"\nlaw.theta.tau = 1", "law.theta.tau"),
        ("law.xi.variant = \"maxwell\"", "law.xi.variant"),
        ("bcs = \"periodic\"", "bcs"),
        ("study.kind = \"bogus\"", "study.kind"),
        ("study.init = \"zero\"", "study.init"),
    ];
    for (text, key) in cases {
        match parse_study(text) {
            Err(Error::Config { key: k, .. }) => assert_eq!(k, key, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
    assert!(parse_model("study.seed = 1").is_err());
    assert!(parse_study("mesh.scheme = \"trig\"\nbcs = \"dirichlet\"").is_err());
    assert!(parse_study("not toml [").unwrap_err().is_config_error());
}

#[test]
fn spec_validation() {
    assert!(matches!(parse_study("study.sweep.rho1 = []"), Err(Error::Spec(_))));
    assert!(matches!(parse_study("study.eps = [1, 0.5, 0.5]"), Err(Error::Spec(_))));
    assert!(matches!(parse_study("study.eps = [0.5, 1]"), Err(Error::Spec(_))));
    assert!(matches!(parse_study("study.eps = [2, 1]"), Err(Error::Spec(_))));
    assert!(matches!(parse_study("study.eps = []"), Err(Error::Spec(_))));
    let tau = parse_study("study.kind = \"cattaneo-eq\"\nstudy.tau = [0]").unwrap_err();
    assert!(matches!(tau, Error::Domain(_)), "{tau:?}");
    let mut spec = small(StudyKind::Sweep);
    spec.sweep.ranges.clear();
    assert!(matches!(run_parameter_sweep(&spec), Err(Error::Spec(_))));
    assert!(matches!(run_study(&spec), Err(Error::Spec(_))));
}

#[test]
fn kind_tags_round_trip() {
    for k in StudyKind::ALL {
        assert_eq!(StudyKind::from_tag(k.tag()), Some(k));
        assert_eq!(serde_json::to_value(k).unwrap(), k.tag());
    }
    assert_eq!(StudyKind::from_tag("combo-matrix"), Some(StudyKind::ComboMatrix));
}

#[test]
fn sweep_draws_cover_both_wave_speed_regimes() {
    let spec = small(StudyKind::Sweep);
    let draws = sweep_draws(&spec);
    assert_eq!(draws.len(), 52);
    assert_eq!(draws, sweep_draws(&spec));
    let equal = draws.iter().find(|d| d.label == "equal-wave-speed").unwrap();
    assert!((equal.model.params.wave_speed_mismatch() - 1.0).abs() < 1e-12);
    let p = draws.iter().find(|d| d.label == "separated-wave-speed").unwrap().model.params;
    let ratio = ((p.k / p.rho1) / (p.b / p.rho2)).sqrt();
    assert!((ratio - 100.0).abs() < 1e-9, "{ratio}");
    for d in &draws[..50] {
        for name in ["rho1", "rho2", "rho3", "rho4", "k", "b", "gamma", "sigma"] {
            let v = d.model.params.get(name).unwrap();
            assert!((0.1..=10.0).contains(&v));
        }
        assert_eq!(d.model.params.varpi1, 1.0);
    }
    let mut other = spec.clone();
    other.seed = 8;
    assert_ne!(sweep_draws(&other)[0], draws[0]);
}

#[test]
fn sweep_flags_the_undamped_draw_and_its_echo_reproduces() {
    let mut spec = small(StudyKind::Sweep);
    spec.sweep.draws = 3;
    spec.sweep.diagnostic = true;
    spec.bcs = BoundarySet::ALL.to_vec();
    let out = run_study(&spec).unwrap();
    assert_eq!(out.records.len(), 12);
    assert_eq!(out.failures(), 2);
    for r in &out.records {
        let undamped = r.label.starts_with("diagnostic");
        assert_eq!(r.is_failure(), undamped, "{}: {:?}", r.label, r.get("abscissa"));
        if undamped {
            let model = r.model().unwrap();
            assert_eq!(model.params.varpi1, 0.0);
            let again = spectra::spectral_abscissa(&assemble(&model).unwrap()).unwrap();
            assert_eq!(again, r.get("abscissa").unwrap());
        }
    }
    let again = run_study(&spec).unwrap();
    let canon = |o: &StudyOutput| o.records.iter().map(OutputRecord::canonical_json).collect::<Vec<_>>();
    assert_eq!(canon(&out), canon(&again));
}

#[test]
fn combo_matrix_is_complete_and_cross_checked() {
    let spec = small(StudyKind::ComboMatrix);
    let out = run_study(&spec).unwrap();
    assert_eq!(out.records.len(), 16);
    assert_eq!(out.failures(), 0);
    let ff = out.records.iter().find(|r| r.label == "F/F/mixed").unwrap();
    assert!(ff.get("reference_mismatch").unwrap() < 1e-9);
    let table = &out.curves[0].csv;
    assert_eq!(table.lines().count(), 5);
    assert!(table.starts_with("theta\\xi,GP,F,C,CG\n"));
    let gp_f = out.records.iter().find(|r| r.label == "GP/F/mixed").unwrap();
    let f_gp = out.records.iter().find(|r| r.label == "F/GP/mixed").unwrap();
    assert_ne!(gp_f.get("abscissa"), f_gp.get("abscissa"));
}

#[test]
fn cattaneo_equivalence_on_a_coarse_mesh() {
    let mut spec = small(StudyKind::CattaneoEquivalence);
    spec.model.bcs = BoundarySet::FullDirichlet;
    let out = run_study(&spec).unwrap();
    assert_eq!(out.records.len(), 4);
    for r in &out.records {
        assert!(r.get("max_mismatch").unwrap() <= 1e-8, "{}", r.label);
    }
    spec.model.discretization.scheme = Scheme::Trig;
    spec.model.bcs = BoundarySet::MixedDirichletNeumann;
    assert!(run_study(&spec).is_err());
}

#[test]
fn limit_kernels_and_identity_rung() {
    let base = make_cattaneo(0.5).unwrap();
    assert_eq!(limit_kernel(&base, LimitTarget::Fourier, 1.0).unwrap().to_pairs(), base.to_pairs());
    let cg = limit_kernel(&base, LimitTarget::ColemanGurtin { ell: 0.5 }, 0.25).unwrap();
    assert_eq!(cg.len(), 2);
    assert!((cg.total_mass() - 1.0).abs() < 1e-12);

    let mut spec = small(StudyKind::SingularLimit);
    spec.limit.eps = vec![1.0, 0.5, 0.25];
    let out = run_study(&spec).unwrap();
    assert_eq!(out.records.len(), 4);
    assert_eq!(out.records[0].get("rescale_identity_defect"), Some(0.0));
    let d: Vec<f64> = out.records[..3].iter().map(|r| r.get("distance").unwrap()).collect();
    assert!(d[2] < d[1] && d[1] < d[0], "{d:?}");
    assert!(out.records[3].label.starts_with("summary/"));
}

#[test]
fn tracked_distance_is_relative() {
    let t = [Eigenvalue { re: -2.0, im: 0.0 }, Eigenvalue { re: -1.0, im: 3.0 }];
    let s = [Eigenvalue { re: -2.2, im: 0.0 }, Eigenvalue { re: -1.0, im: 3.0 }, Eigenvalue { re: -9.0, im: 0.0 }];
    assert!((tracked_distance(&t, &s) - 0.1).abs() < 1e-12);
}

#[test]
fn single_model_studies_emit_curves() {
    let mut spec = small(StudyKind::Spectrum);
    spec.richardson = true;
    let out = run_study(&spec).unwrap();
    assert!(out.curves[0].csv.starts_with("# abscissa = "));
    assert!(out.records[0].get("richardson_relative").is_some());
    assert_eq!(out.failures(), 0);

    spec.kind = StudyKind::Resolvent;
    let out = run_study(&spec).unwrap();
    assert!(out.records[0].get("min_norm_times_distance").unwrap() >= 1.0 - 1e-8);
    assert!(out.curves[0].csv.starts_with("lambda,norm\n"));

    spec.kind = StudyKind::Simulate;
    spec.simulate = SimulateSpec { dt: 0.05, t_final: 2.0, init: InitialData::LeastDampedMode };
    let out = run_study(&spec).unwrap();
    assert_eq!(out.failures(), 0);
    assert_eq!(out.curves[0].csv.lines().count(), 42);
}

#[test]
fn output_paths() {
    let env = Path::new("/tmp/envdir");
    let p = OutputPaths::resolve_in(StudyKind::Spectrum, Some(Path::new("spec.csv")), Some(env));
    assert_eq!(p.primary_csv.as_deref(), Some(Path::new("/tmp/envdir/spec.csv")));
    assert_eq!(p.records, Path::new("/tmp/envdir/spec.jsonl"));
    let p = OutputPaths::resolve_in(StudyKind::Sweep, Some(Path::new("/abs/run.jsonl")), Some(env));
    assert_eq!(p.records, Path::new("/abs/run.jsonl"));
    assert_eq!(p.curve_path(0, "sweep"), Path::new("/abs/run_sweep.csv"));
    let p = OutputPaths::resolve_in(StudyKind::ComboMatrix, None, None);
    assert_eq!(p.records, Path::new("./combo.jsonl"));
    let p = OutputPaths::resolve_in(StudyKind::ComboMatrix, Some(Path::new("results")), None);
    assert_eq!(p.records, Path::new("./results/combo.jsonl"));
}

#[test]
fn writes_records_curves_and_scripts() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small(StudyKind::Spectrum);
    let out = run_study(&spec).unwrap();
    let paths = OutputPaths::resolve_in(StudyKind::Spectrum, Some(&dir.path().join("nested/spec.csv")), None);
    let written = write_output(&out, &paths, true).unwrap();
    assert_eq!(written.len(), 3);
    let records = std::fs::read_to_string(&paths.records).unwrap();
    let parsed: OutputRecord = serde_json::from_str(records.lines().next().unwrap()).unwrap();
    assert_eq!(echo(&parsed.model().unwrap()), echo(&spec.model));
    let script = std::fs::read_to_string(dir.path().join("nested/spec.gp")).unwrap();
    assert!(script.contains("'spec.csv'"));
    assert!(plot_script(PlotKind::None, Path::new("x.csv")).is_none());
}
