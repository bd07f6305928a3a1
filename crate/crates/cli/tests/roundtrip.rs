use proptest::prelude::*;
use ptscatter_cli::format::{fmt_f64, Table};

fn cell() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![
        8 => any::<f64>().prop_filter("finite", |v| v.is_finite()).prop_map(Some),
        1 => Just(None),
        1 => prop_oneof![Just(f64::INFINITY), Just(f64::NEG_INFINITY)].prop_map(Some),
    ]
}

fn finite_cell() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![
        8 => any::<f64>().prop_filter("finite", |v| v.is_finite()).prop_map(Some),
        1 => Just(None),
    ]
}

const HEADER: [&str; 5] = ["xi", "ka", "T2", "phase", "delay_ratio"];

fn table(rows: Vec<Vec<Option<f64>>>) -> Table {
    let mut t = Table::new(&HEADER);
    for r in rows {
        t.push(r);
    }
    t
}

proptest! {
    #[test]
    fn float_text_round_trips(x in any::<f64>().prop_filter("not nan", |v| !v.is_nan())) {
        let s = fmt_f64(x);
        prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        let mantissa: String = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).collect();
        let digits = mantissa.trim_start_matches('0').len();
        prop_assert!(digits <= 17 || !x.is_finite(), "{}", s);
    }

    #[test]
    fn csv_round_trips(rows in prop::collection::vec(prop::collection::vec(cell(), 5), 0..20)) {
        let t = table(rows);
        let text = t.to_csv();
        prop_assert!(!text.contains('\r'));
        prop_assert_eq!(Table::from_csv(&text).unwrap(), t);
    }

    #[test]
    fn json_round_trips(rows in prop::collection::vec(prop::collection::vec(finite_cell(), 5), 0..20)) {
        let t = table(rows);
        let text = serde_json::to_string(&t.to_json()).unwrap();
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(Table::from_json(&HEADER, &back).unwrap(), t);
    }
}
