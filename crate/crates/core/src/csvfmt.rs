//! Float formatting shared by every CSV writer: 17 significant digits so that
//! values round-trip and repeated runs produce identical bytes.

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn row<I: IntoIterator<Item = f64>>(values: I) -> String {
    values.into_iter().map(num).collect::<Vec<_>>().join(",")
}
