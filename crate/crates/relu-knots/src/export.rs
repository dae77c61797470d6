//! Knot tables for plotting and exact re-evaluation.
//!
//! Columns: `output_index, x_rational, x_decimal, value_rational,
//! value_decimal, left_slope_rational, right_slope_rational`.
//!
//! Each output starts with a `-inf` row and ends with a `+inf` row
//! describing the two unbounded rays. On those rows both slope columns hold
//! the ray's slope and the value columns hold the value of the ray's line at
//! `x = 0`. The rows in between are the knots in increasing order.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use relu_knots_core::rational::{self, Rational};
use relu_knots_core::{LinearSpline, VectorSpline};
use thiserror::Error;

pub const CSV_HEADER: &str =
    "output_index,x_rational,x_decimal,value_rational,value_decimal,left_slope_rational,right_slope_rational";

/// One knot of one output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnotRecord {
    pub x: Rational,
    pub value: Rational,
    pub left_slope: Rational,
    pub right_slope: Rational,
}

/// An unbounded piece, as the line `slope·x + intercept`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RayRecord {
    pub slope: Rational,
    pub intercept: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplineExport {
    pub left_ray: RayRecord,
    pub knots: Vec<KnotRecord>,
    pub right_ray: RayRecord,
}

impl SplineExport {
    pub fn from_spline(f: &LinearSpline) -> Self {
        let slopes = f.slopes();
        let values = f.knot_values();
        let knots: Vec<KnotRecord> = f
            .breakpoints()
            .iter()
            .zip(values)
            .enumerate()
            .map(|(i, (bp, value))| KnotRecord {
                x: bp.x.clone(),
                value,
                left_slope: slopes[i].clone(),
                right_slope: slopes[i + 1].clone(),
            })
            .collect();
        let final_slope = slopes[slopes.len() - 1].clone();
        let right_intercept = match knots.last() {
            Some(k) => &k.value - &final_slope * &k.x,
            None => f.initial_intercept().clone(),
        };
        SplineExport {
            left_ray: RayRecord {
                slope: f.initial_slope().clone(),
                intercept: f.initial_intercept().clone(),
            },
            knots,
            right_ray: RayRecord {
                slope: final_slope,
                intercept: right_intercept,
            },
        }
    }

    /// Piecewise evaluation straight from the records.
    pub fn eval(&self, x: &Rational) -> Rational {
        let Some(first) = self.knots.first() else {
            return &self.left_ray.slope * x + &self.left_ray.intercept;
        };
        if *x <= first.x {
            return &self.left_ray.slope * x + &self.left_ray.intercept;
        }
        let last = &self.knots[self.knots.len() - 1];
        if *x >= last.x {
            return &self.right_ray.slope * x + &self.right_ray.intercept;
        }
        let i = self.knots.partition_point(|k| k.x <= *x);
        let left = &self.knots[i - 1];
        &left.value + &left.right_slope * (x - &left.x)
    }
}

/// Decimal rendering with `digits` significant digits, computed exactly.
pub fn to_decimal(value: &Rational, digits: usize) -> String {
    if value.is_zero() {
        return "0".into();
    }
    let negative = value.is_negative();
    let numer = value.numer().abs();
    let denom = value.denom().clone();
    // exponent e with 10^e <= |value| < 10^(e+1)
    let ten = BigInt::from(10);
    let mut exponent: i64 = numer.to_string().len() as i64 - denom.to_string().len() as i64;
    let pow = |e: i64| ten.pow(e.unsigned_abs() as u32);
    let at_least = |e: i64| {
        if e >= 0 {
            numer >= &denom * pow(e)
        } else {
            &numer * pow(e) >= denom
        }
    };
    while !at_least(exponent) {
        exponent -= 1;
    }
    while at_least(exponent + 1) {
        exponent += 1;
    }
    // scaled = round(|value| * 10^(digits - 1 - exponent))
    let shift = digits as i64 - 1 - exponent;
    let (n, d) = if shift >= 0 {
        (&numer * pow(shift), denom.clone())
    } else {
        (numer.clone(), &denom * pow(shift))
    };
    let mut scaled: BigInt = (&n * 2 + &d) / (&d * 2);
    if scaled.to_string().len() > digits {
        scaled /= 10;
        exponent += 1;
    }
    let mantissa = scaled.to_string();
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if (0..digits as i64).contains(&exponent) {
        let (int_part, frac_part) = mantissa.split_at(exponent as usize + 1);
        out.push_str(int_part);
        push_fraction(&mut out, frac_part);
    } else if (-6..0).contains(&exponent) {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exponent - 1) as usize));
        out.push_str(mantissa.trim_end_matches('0'));
    } else {
        let (int_part, frac_part) = mantissa.split_at(1);
        out.push_str(int_part);
        push_fraction(&mut out, frac_part);
        write!(out, "e{exponent}").unwrap();
    }
    out
}

fn push_fraction(out: &mut String, digits: &str) {
    let digits = digits.trim_end_matches('0');
    if !digits.is_empty() {
        out.push('.');
        out.push_str(digits);
    }
}

const DECIMAL_DIGITS: usize = 20;

pub fn write_csv(splines: &VectorSpline) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (index, f) in splines.components().iter().enumerate() {
        let export = SplineExport::from_spline(f);
        let ray = |out: &mut String, label: &str, r: &RayRecord| {
            writeln!(
                out,
                "{index},{label},{label},{},{},{},{}",
                r.intercept,
                to_decimal(&r.intercept, DECIMAL_DIGITS),
                r.slope,
                r.slope
            )
            .unwrap();
        };
        ray(&mut out, "-inf", &export.left_ray);
        for k in &export.knots {
            writeln!(
                out,
                "{index},{},{},{},{},{},{}",
                k.x,
                to_decimal(&k.x, DECIMAL_DIGITS),
                k.value,
                to_decimal(&k.value, DECIMAL_DIGITS),
                k.left_slope,
                k.right_slope
            )
            .unwrap();
        }
        ray(&mut out, "+inf", &export.right_ray);
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CsvError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Reads back the exact columns written by [`write_csv`].
pub fn read_csv(text: &str) -> Result<Vec<SplineExport>, CsvError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        _ => {
            return Err(CsvError::Malformed {
                line: 1,
                message: "missing header".into(),
            })
        }
    }
    let mut exports: Vec<SplineExport> = Vec::new();
    let mut open: Option<(usize, RayRecord, Vec<KnotRecord>)> = None;
    for (i, line) in lines {
        let err = |message: &str| CsvError::Malformed {
            line: i + 1,
            message: message.into(),
        };
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(err("expected 7 columns"));
        }
        let parse = |s: &str| rational::parse(s).map_err(|e| err(&e.to_string()));
        let index: usize = cols[0].parse().map_err(|_| err("bad output index"))?;
        match (cols[1], open.take()) {
            ("-inf", None) => {
                if index != exports.len() {
                    return Err(err("outputs out of order"));
                }
                let ray = RayRecord {
                    slope: parse(cols[5])?,
                    intercept: parse(cols[3])?,
                };
                open = Some((index, ray, Vec::new()));
            }
            ("+inf", Some((idx, left_ray, knots))) if idx == index => {
                exports.push(SplineExport {
                    left_ray,
                    knots,
                    right_ray: RayRecord {
                        slope: parse(cols[5])?,
                        intercept: parse(cols[3])?,
                    },
                });
            }
            (x, Some((idx, left_ray, mut knots))) if idx == index && x != "-inf" && x != "+inf" => {
                knots.push(KnotRecord {
                    x: parse(x)?,
                    value: parse(cols[3])?,
                    left_slope: parse(cols[5])?,
                    right_slope: parse(cols[6])?,
                });
                open = Some((idx, left_ray, knots));
            }
            _ => return Err(err("unexpected row")),
        }
    }
    if open.is_some() {
        return Err(CsvError::Malformed {
            line: text.lines().count(),
            message: "output not terminated by a +inf row".into(),
        });
    }
    Ok(exports)
}
