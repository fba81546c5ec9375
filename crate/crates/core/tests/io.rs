mod common;

use common::*;
use skdv::io::*;
use skdv::{Error, State};

#[test]
fn field_csv_round_trips_exactly() {
    let g = line(64, 5.0);
    let f = bumps(&g, &mut rng(1), 3.0);
    let mut buf = Vec::new();
    write_field_csv(&mut buf, &f).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("coord,value\n"));
    assert_eq!(text.lines().count(), 65);
    let back = read_field_csv(&buf[..], &g).unwrap();
    assert_eq!(back, f);
}

#[test]
fn state_csv_round_trips_exactly() {
    let g = radial(50, 4.0, 3);
    let s = random_state(&g, &mut rng(2));
    let mut buf = Vec::new();
    write_state_csv(&mut buf, &s).unwrap();
    assert!(String::from_utf8_lossy(&buf).starts_with("coord,u,v\n"));
    let back: State = read_state_csv(&buf[..], &g).unwrap();
    assert_eq!(back, s);
}

#[test]
fn csv_errors() {
    let g = line(8, 2.0);
    let body = |first: &str| {
        let mut rows: Vec<String> = g.nodes().iter().map(|x| format!("{x},0")).collect();
        rows[0] = first.to_string();
        format!("coord,value\n{}\n", rows.join("\n"))
    };
    let x0 = g.nodes()[0];
    assert!(matches!(read_field_csv(&b""[..], &g), Err(Error::Parse(_))));
    assert!(matches!(read_field_csv(&b"x,y\n"[..], &g), Err(Error::Parse(_))));
    let short = format!("coord,value\n{x0},0\n");
    assert!(matches!(read_field_csv(short.as_bytes(), &g), Err(Error::Parse(_))));
    assert!(read_field_csv(body(&format!("{x0},0")).as_bytes(), &g).is_ok());
    let nonnum = body(&format!("{x0},a"));
    assert!(matches!(read_field_csv(nonnum.as_bytes(), &g), Err(Error::Parse(_))));
    let shifted = body(&format!("{},0", x0 + 0.1));
    assert_eq!(read_field_csv(shifted.as_bytes(), &g).unwrap_err(), Error::GridMismatch);
    let nan = body(&format!("{x0},NaN"));
    assert!(read_field_csv(nan.as_bytes(), &g).is_err());
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
        let s = fmt_f64(x);
        let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
        assert_eq!(mantissa.len(), 17);
        assert_eq!(s.parse::<f64>().unwrap(), x);
    }
}

#[test]
fn flat_json_is_valid_and_ordered() {
    let mut j = FlatJson::new();
    j.insert("b", 1.5).insert("a", 3usize).insert("flag", true).insert("name", "quote\"d\n");
    j.insert("none", None::<f64>).insert("nan", f64::NAN).insert("b", 2.5);
    let text = j.render();
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed["b"], 2.5);
    assert_eq!(parsed["a"], 3);
    assert_eq!(parsed["flag"], true);
    assert_eq!(parsed["name"], "quote\"d\n");
    assert!(parsed["none"].is_null() && parsed["nan"].is_null());
    let order: Vec<usize> = ["\"b\"", "\"a\"", "\"flag\""].iter().map(|k| text.find(k).unwrap()).collect();
    assert!(order.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(j.get("b"), Some(&JsonValue::Num(2.5)));
}
