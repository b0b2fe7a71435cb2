//! Plot-ready CSV tables. Floats use Rust's shortest round-trip formatting;
//! divergences are in nats.

use std::fmt::Write;

use crate::boundary::BoundaryPoint;
use crate::greedy::{AllocationResult, GrowthPoint};
use crate::sim::ExponentCurvePoint;
use crate::solver::TradeoffPoint;

pub const TRACE_HEADER: &str = "x,y,x_e,y_e,slope,curvature,d_e";
pub const TRADEOFF_HEADER: &str = "alpha_tilde,d_fc_max,lambda,pfa,pd,d_eve,binding";
pub const ALLOCATION_HEADER: &str = "index,k_i,alpha_i,active,lambda,d_fc_i,d_eve_i";
pub const GROWTH_HEADER: &str = "n,total_d_fc,total_d_eve,active_count";
pub const STEIN_HEADER: &str = "window,log_miss,exponent,local_slope,target_kld";
pub const H_TRACE_HEADER: &str = "lambda,h";

fn table<T>(header: &str, rows: &[T], mut row: impl FnMut(&mut String, &T)) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(header);
    out.push('\n');
    for r in rows {
        row(&mut out, r);
        out.push('\n');
    }
    out
}

pub fn trace_csv(points: &[BoundaryPoint]) -> String {
    table(TRACE_HEADER, points, |s, p| {
        let _ = write!(
            s,
            "{},{},{},{},{},{},{}",
            p.op.pfa, p.op.pd, p.eve_op.pfa, p.eve_op.pd, p.slope, p.curvature, p.d_e
        );
    })
}

pub fn tradeoff_csv(points: &[TradeoffPoint]) -> String {
    table(TRADEOFF_HEADER, points, |s, p| {
        let d = &p.design;
        let _ = write!(
            s,
            "{},{},{},{},{},{},{}",
            p.alpha_tilde, p.d_fc_max, d.lambda, d.op.pfa, d.op.pd, d.d_eve, d.binding
        );
    })
}

/// One row per sensor in site order.
pub fn allocation_csv(result: &AllocationResult) -> String {
    table(ALLOCATION_HEADER, &result.by_index(), |s, a| {
        let _ = write!(
            s,
            "{},{},{},{},{},{},{}",
            a.index, a.quality, a.alpha_i, a.active, a.design.lambda, a.design.d_fc, a.design.d_eve
        );
    })
}

pub fn growth_csv(points: &[GrowthPoint]) -> String {
    table(GROWTH_HEADER, points, |s, p| {
        let _ = write!(s, "{},{},{},{}", p.n, p.total_d_fc, p.total_d_eve, p.active_count);
    })
}

pub fn stein_csv(points: &[ExponentCurvePoint], target_kld: f64) -> String {
    table(STEIN_HEADER, points, |s, p| {
        let _ = write!(
            s,
            "{},{},{},{},{}",
            p.window, p.log_miss, p.exponent, p.local_slope, target_kld
        );
    })
}

pub fn h_trace_csv(points: &[(f64, f64)]) -> String {
    table(H_TRACE_HEADER, points, |s, (l, h)| {
        let _ = write!(s, "{l},{h}");
    })
}
