//! CSV rendering shared by the command-line tools.

use std::fmt::Write as _;

pub const REGRET_CSV_HEADER: &str = "experiment,forecaster,adversary,loss,K,T,trial,seed,regret";
pub const SANDWICH_CSV_HEADER: &str = "r,u_r,v_r,a_r,upper_bound,lower_bound";

/// Significant digits used for every float written to CSV.
pub const CSV_DIGITS: usize = 12;

/// Formats `x` like C's `%.{digits}g`: shortest of fixed or scientific
/// notation with trailing zeros removed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// [`format_sig`] at [`CSV_DIGITS`].
pub fn fmt_float(x: f64) -> String {
    format_sig(x, CSV_DIGITS)
}

/// Quotes a field if it contains a comma, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One line of regret output.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretRow {
    pub experiment: String,
    pub forecaster: String,
    pub adversary: String,
    pub loss: String,
    pub k: usize,
    pub horizon: usize,
    pub trial: usize,
    pub seed: u64,
    pub regret: f64,
}

impl RegretRow {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            csv_field(&self.experiment),
            csv_field(&self.forecaster),
            csv_field(&self.adversary),
            csv_field(&self.loss),
            self.k,
            self.horizon,
            self.trial,
            self.seed,
            fmt_float(self.regret)
        )
        .expect("writing to a String cannot fail");
        s
    }
}
