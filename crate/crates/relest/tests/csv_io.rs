use relest::io::{read_input, write_input, InputSample};
use relest::{Category, Error};

const D: f64 = 50e-6;

#[test]
fn round_trip_is_exact() {
    let samples: Vec<InputSample> = (0..50)
        .map(|k| InputSample { t: k as f64 * D, u: 30.0 + (k as f64).sin() * 1e-2, iota: 0.1 / (k as f64 + 3.0) })
        .collect();
    let mut buf = Vec::new();
    write_input(&mut buf, &samples).unwrap();
    assert!(buf.starts_with(b"t,u,iota\n"));
    let back = read_input(buf.as_slice(), "mem", D).unwrap();
    assert_eq!(back, samples);
}

#[test]
fn extra_columns_and_order_are_tolerated() {
    let text = "iota,note,t,u\n0.1,a,0,1\n0.2,b,0.00005,2\n";
    let s = read_input(text.as_bytes(), "mem", D).unwrap();
    assert_eq!(s[1], InputSample { t: 0.00005, u: 2.0, iota: 0.2 });
}

#[test]
fn malformed_row_reports_line_number() {
    let text = "t,u,iota\n0,1,0.1\n0.00005,abc,0.2\n";
    match read_input(text.as_bytes(), "rec.csv", D).unwrap_err() {
        Error::Parse { line, msg, .. } => {
            assert_eq!(line, 3);
            assert!(msg.contains("u"), "{msg}");
        }
        e => panic!("unexpected {e}"),
    }
    let ragged = "t,u,iota\n0,1,0.1\n0.00005,2\n";
    let err = read_input(ragged.as_bytes(), "rec.csv", D).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    assert_eq!(err.category(), Category::Parse);
}

#[test]
fn empty_inputs() {
    for text in ["", "t,u,iota\n"] {
        let err = read_input(text.as_bytes(), "empty.csv", D).unwrap_err();
        assert!(matches!(err, Error::EmptyInput(_)), "{text:?}: {err}");
    }
}

#[test]
fn schema_errors() {
    let err = read_input("t,u\n0,1\n".as_bytes(), "m", D).unwrap_err();
    assert!(matches!(err, Error::Schema { .. }), "{err}");
    let jumpy = "t,u,iota\n0,1,0\n0.00005,1,0\n0.00015,1,0\n";
    let err = read_input(jumpy.as_bytes(), "m", D).unwrap_err();
    assert!(err.to_string().contains("non-uniform"), "{err}");
    let wrong_rate = "t,u,iota\n0,1,0\n0.0001,1,0\n";
    assert!(read_input(wrong_rate.as_bytes(), "m", D).is_err());
}
