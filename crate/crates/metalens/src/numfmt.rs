//! One place for every number-to-text rule, so CSVs, SVGs and reports never
//! disagree with each other after rounding.

/// Statistic formatting: four decimals down to 1e-4, scientific notation with
/// three significant digits below that. 0 prints as "0.0000".
pub(crate) fn fmt_stat(x: f64) -> String {
    if x == 0.0 || x.abs() >= 1e-4 {
        format!("{x:.4}")
    } else {
        format!("{x:.2e}")
    }
}

/// Like `fmt_stat` but pads scientific exponents to two digits ("1.03e-05"),
/// the style used in rendered reports.
pub(crate) fn fmt_stat_padded(x: f64) -> String {
    let s = fmt_stat(x);
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let (sign, digits) = match exp.as_bytes()[0] {
                b'-' => ("-", &exp[1..]),
                _ => ("", exp),
            };
            format!("{mantissa}e{sign}{digits:0>2}")
        }
        None => s,
    }
}

pub(crate) fn fmt_fixed6(x: f64) -> String {
    format!("{x:.6}")
}

/// Six significant digits with trailing zeros trimmed; used for SVG
/// coordinates so output bytes are stable and compact.
pub(crate) fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}
