//! Minimal self-contained SVG scatter plot (no external assets).

/// Render latent codes as a 2-d scatter, colored by the family parameter
/// when present (blue = low, red = high) and gray otherwise.
pub fn scatter_svg(points: &[(f64, f64)], alphas: &[Option<f64>]) -> String {
    let (w, h, margin) = (640.0, 480.0, 48.0);
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    if !(xmax - xmin).is_normal() {
        xmax = xmin + 1.0;
    }
    if !(ymax - ymin).is_normal() {
        ymax = ymin + 1.0;
    }
    let (amin, amax) = alphas
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| {
            (lo.min(a), hi.max(a))
        });

    let sx = |x: f64| margin + (x - xmin) / (xmax - xmin) * (w - 2.0 * margin);
    let sy = |y: f64| h - margin - (y - ymin) / (ymax - ymin) * (h - 2.0 * margin);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <line x1=\"{margin}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"#444\"/>\n\
         <line x1=\"{margin}\" y1=\"{margin}\" x2=\"{margin}\" y2=\"{y0}\" stroke=\"#444\"/>\n",
        y0 = h - margin,
        x1 = w - margin,
    );
    for (&(x, y), alpha) in points.iter().zip(alphas.iter()) {
        let color = match alpha {
            Some(a) if amax > amin => {
                let t = (a - amin) / (amax - amin);
                let r = (40.0 + 200.0 * t) as u8;
                let b = (240.0 - 200.0 * t) as u8;
                format!("rgb({r},60,{b})")
            }
            Some(_) => "rgb(140,60,140)".to_string(),
            None => "#888".to_string(),
        };
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"{color}\" fill-opacity=\"0.8\"/>\n",
            sx(x),
            sy(y)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.0}\" y=\"{:.0}\" font-family=\"monospace\" font-size=\"12\">latent codes \
         ({} points)</text>\n</svg>\n",
        margin,
        margin - 16.0,
        points.len()
    ));
    svg
}
