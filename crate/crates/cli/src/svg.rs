//! Hand-rolled SVG plots for rate tables: log-log axes, per-row error bars,
//! the fitted decay line, and a legend. Output bytes are a pure function of
//! the table (fixed-precision formatting, no timestamps).

use std::fmt::Write as _;

use cltlab::runner::{FitForm, RateTable};
use cltlab::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 32.0;
const MARGIN_B: f64 = 56.0;

struct LogAxis {
    lo: f64,
    hi: f64,
    offset: f64,
    span: f64,
    flip: bool,
}

impl LogAxis {
    fn new(lo: f64, hi: f64, offset: f64, span: f64, flip: bool) -> Self {
        LogAxis {
            lo: lo.log10(),
            hi: hi.log10(),
            offset,
            span,
            flip,
        }
    }

    fn place(&self, value: f64) -> f64 {
        let t = (value.log10() - self.lo) / (self.hi - self.lo);
        let t = if self.flip { 1.0 - t } else { t };
        self.offset + t * self.span
    }
}

/// Renders a self-contained log-log SVG plot of the mean distances.
pub fn render_svg(table: &RateTable) -> Result<String> {
    if table.rows.len() < 2 {
        return Err(Error::invalid("SVG plot needs at least 2 rows"));
    }
    let xs: Vec<f64> = table.rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = table.rows.iter().map(|r| r.mean_rho_phi).collect();
    if ys.iter().any(|y| !(*y > 0.0)) {
        return Err(Error::invalid("SVG plot needs positive means"));
    }
    let y_lo_data = table
        .rows
        .iter()
        .map(|r| (r.mean_rho_phi - r.stderr_phi).max(r.mean_rho_phi * 0.5))
        .fold(f64::INFINITY, f64::min);
    let y_hi_data = table
        .rows
        .iter()
        .map(|r| r.mean_rho_phi + r.stderr_phi)
        .fold(0.0f64, f64::max);

    let x_axis = LogAxis::new(
        xs.first().copied().unwrap() * 0.9,
        xs.last().copied().unwrap() * 1.1,
        MARGIN_L,
        WIDTH - MARGIN_L - MARGIN_R,
        false,
    );
    let y_axis = LogAxis::new(
        y_lo_data * 0.8,
        y_hi_data * 1.25,
        MARGIN_T,
        HEIGHT - MARGIN_T - MARGIN_B,
        true,
    );

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    // Axes.
    let x0 = MARGIN_L;
    let x1 = WIDTH - MARGIN_R;
    let y0 = HEIGHT - MARGIN_B;
    let y1 = MARGIN_T;
    let _ = writeln!(
        svg,
        r#"<line x1="{x0:.4}" y1="{y0:.4}" x2="{x1:.4}" y2="{y0:.4}" stroke="black" stroke-width="1"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{x0:.4}" y1="{y0:.4}" x2="{x0:.4}" y2="{y1:.4}" stroke="black" stroke-width="1"/>"#
    );

    // X ticks at the data dimensions.
    for (&n, _) in xs.iter().zip(&ys) {
        let px = x_axis.place(n);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.4}" y1="{y0:.4}" x2="{px:.4}" y2="{:.4}" stroke="black" stroke-width="1"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{px:.4}" y="{:.4}" font-size="12" text-anchor="middle">{}</text>"#,
            y0 + 20.0,
            n as usize
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.4}" y="{:.4}" font-size="13" text-anchor="middle">n (log scale)</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0
    );

    // Y ticks at powers of ten covering the range.
    let dec_lo = (y_lo_data * 0.8).log10().floor() as i32;
    let dec_hi = (y_hi_data * 1.25).log10().ceil() as i32;
    for d in dec_lo..=dec_hi {
        let v = 10f64.powi(d);
        if v < y_lo_data * 0.8 || v > y_hi_data * 1.25 {
            continue;
        }
        let py = y_axis.place(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.4}" y1="{py:.4}" x2="{x0:.4}" y2="{py:.4}" stroke="black" stroke-width="1"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.4}" y="{:.4}" font-size="12" text-anchor="end">1e{d}</text>"#,
            x0 - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{:.4}" font-size="13" text-anchor="middle" transform="rotate(-90 14 {:.4})">mean Kolmogorov distance</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    // Error bars and points.
    for r in &table.rows {
        let px = x_axis.place(r.n as f64);
        let lo = (r.mean_rho_phi - r.stderr_phi).max(r.mean_rho_phi * 0.5);
        let hi = r.mean_rho_phi + r.stderr_phi;
        let py_lo = y_axis.place(lo);
        let py_hi = y_axis.place(hi);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.4}" y1="{py_lo:.4}" x2="{px:.4}" y2="{py_hi:.4}" stroke="steelblue" stroke-width="1.5"/>"#
        );
        let py = y_axis.place(r.mean_rho_phi);
        let _ = writeln!(
            svg,
            r#"<circle cx="{px:.4}" cy="{py:.4}" r="3.5" fill="steelblue"/>"#
        );
    }

    // Data polyline.
    let mut pts = String::new();
    for r in &table.rows {
        let _ = write!(
            pts,
            "{:.4},{:.4} ",
            x_axis.place(r.n as f64),
            y_axis.place(r.mean_rho_phi)
        );
    }
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1"/>"#,
        pts.trim_end()
    );

    // Fitted curve.
    if let Some(fit) = &table.fitted {
        let mut pts = String::new();
        for r in &table.rows {
            let nf = r.n as f64;
            let y = match fit.form {
                FitForm::Power => fit.c * nf.powf(fit.alpha),
                FitForm::PowerTimesLog => fit.c * nf.ln() * nf.powf(fit.alpha),
            };
            let _ = write!(pts, "{:.4},{:.4} ", x_axis.place(nf), y_axis.place(y));
        }
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="firebrick" stroke-width="1.5" stroke-dasharray="6 3"/>"#,
            pts.trim_end()
        );
        let label = match fit.form {
            FitForm::Power => format!("fit: {:.3} * n^{:.3} (r2 = {:.4})", fit.c, fit.alpha, fit.r_squared),
            FitForm::PowerTimesLog => format!(
                "fit: {:.3} * log(n) * n^{:.3} (r2 = {:.4})",
                fit.c, fit.alpha, fit.r_squared
            ),
        };
        let _ = writeln!(
            svg,
            r#"<text x="{:.4}" y="{:.4}" font-size="12" fill="firebrick">{label}</text>"#,
            x0 + 12.0,
            y1 + 16.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.4}" y="{:.4}" font-size="12" fill="steelblue">mean rho(F_theta, Phi) with stderr</text>"#,
        x0 + 12.0,
        y1 + 32.0
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes the plot to disk.
pub fn emit_svg(table: &RateTable, path: &std::path::Path) -> Result<()> {
    let svg = render_svg(table)?;
    std::fs::write(path, svg)?;
    Ok(())
}
