use isc_cli::{parse_config, write_config, ConfigError};
use isc_core::sim::{ScenarioConfig, ScenarioKind};
use isc_core::DriverKind;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn parse(text: &str, kind: Option<ScenarioKind>) -> Result<ScenarioConfig, ConfigError> {
    parse_config(text, "test.toml", kind)
}

#[test]
fn empty_config_gives_defaults() {
    let c = parse("", Some(ScenarioKind::PathFollowing)).unwrap();
    assert_eq!(c.vehicle.u_long, 20.0);
    assert_eq!(c.t_s, 0.02);
    assert_eq!(c.horizon, 50);
    assert_eq!(c.q_a, DMatrix::from_row_slice(2, 2, &[1.5, 0.0, 0.0, 0.6]));
    assert_eq!(
        c.q_d,
        DMatrix::from_row_slice(2, 2, &[0.036, 0.0, 0.0, 0.02])
    );
    assert_eq!(c, ScenarioConfig::defaults(ScenarioKind::PathFollowing));
}

#[test]
fn obstacle_driver_weights() {
    let c = parse("q_d = [36, 0, 0, 20]\n", None).unwrap();
    assert_eq!(
        c.q_d,
        DMatrix::from_row_slice(2, 2, &[36.0, 0.0, 0.0, 20.0])
    );
}

#[test]
fn simplex_violation_rejected() {
    let e = parse("lambda_d = 0.6\nlambda_a = 0.6\n", None).unwrap_err();
    assert!(matches!(e, ConfigError::Invalid { .. }));
    assert!(e.to_string().contains("sum to 1"), "{e}");
}

#[test]
fn single_weight_derives_the_other() {
    let c = parse("lambda_a = 0.25\n", None).unwrap();
    assert_eq!((c.lambda_d, c.lambda_a), (0.75, 0.25));
    let c = parse("lambda_d = 0.2\n", None).unwrap();
    assert_eq!((c.lambda_d, c.lambda_a), (0.2, 0.8));
}

#[test]
fn parse_errors_carry_lines() {
    let e = parse("# comment\nduration = 10\nhorizon = \"x\"\n", None).unwrap_err();
    match e {
        ConfigError::Parse { line, .. } => assert_eq!(line, 3),
        other => panic!("{other}"),
    }
    let e = parse("\n\nbogus = 1\n", None).unwrap_err();
    assert!(e.to_string().starts_with("test.toml:3:"), "{e}");
    let e = parse("driver = \"sleepy\"\n", None).unwrap_err();
    assert!(e.to_string().starts_with("test.toml:1:"), "{e}");
}

#[test]
fn scenario_key_and_request_must_agree() {
    let c = parse("scenario = \"combined\"\n", None).unwrap();
    assert_eq!(c.kind, ScenarioKind::Combined);
    assert!(c.switching.is_some());
    assert!(parse(
        "scenario = \"combined\"\n",
        Some(ScenarioKind::PathFollowing)
    )
    .is_err());
}

#[test]
fn switching_keys_need_switching() {
    assert!(parse("window = 20\n", Some(ScenarioKind::PathFollowing)).is_err());
    let c = parse("switching = true\nwindow = 20\n", None).unwrap();
    assert_eq!(c.switching.unwrap().window, 20);
    let c = parse("switching = false\n", Some(ScenarioKind::Combined)).unwrap();
    assert!(c.switching.is_none());
}

#[test]
fn invalid_values_name_the_parameter() {
    let e = parse("r_d = -1\n", None).unwrap_err();
    assert!(e.to_string().contains("`r_d`"), "{e}");
    let e = parse("duration = 0.5\n", None).unwrap_err();
    assert!(e.to_string().contains("duration"), "{e}");
}

#[test]
fn defaults_round_trip() {
    for k in ScenarioKind::ALL {
        let c = ScenarioConfig::defaults(k);
        assert_eq!(parse(&write_config(&c), None).unwrap(), c);
    }
}

fn arb_config() -> impl Strategy<Value = ScenarioConfig> {
    (
        prop::sample::select(ScenarioKind::ALL.to_vec()),
        0.0..=1.0f64,
        (0.01..100.0f64, 0.01..100.0f64, -0.005..0.005f64),
        (1e-6..10.0f64, 1e-6..10.0f64),
        (100u32..400, 5usize..60),
        (0.1..5.0f64, 1.0..20.0f64, -5.0..5.0f64),
        any::<bool>(),
        (0.01..1.0f64, 0.51..1.0f64, 0.0..0.49f64, 1usize..80),
    )
        .prop_map(
            |(kind, la, (q0, q1, q01), (ra, rd), (steps, n), (amp, per, off), conv, sw)| {
                let mut c = ScenarioConfig::defaults(kind).with_lambda_a(la);
                c.horizon = n;
                c.duration = steps.max(2 * n as u32) as f64 * c.t_s;
                c.q_d = DMatrix::from_row_slice(2, 2, &[q0, q01, q01, q1]);
                c.r_a = ra;
                c.r_d = rd;
                c.path.amplitude = amp;
                c.path.period = per;
                c.path.offset = off;
                if conv {
                    c.driver = DriverKind::Conventional;
                }
                if let Some(s) = c.switching.as_mut() {
                    s.delta_star = sw.0;
                    s.lambda_d_high = sw.1;
                    s.lambda_d_low = sw.2;
                    s.window = sw.3;
                }
                c
            },
        )
        .prop_filter("valid", |c| c.validate().is_ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip(c in arb_config()) {
        let text = write_config(&c);
        prop_assert_eq!(parse(&text, None).unwrap(), c);
    }
}
