/// Parses `start:stop:step` into the grid `start, start + step, ..` up to `stop`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(format!("grid `{spec}` is not start:stop:step"));
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"));
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if !(0.0..1.0).contains(&start) || !(start..1.0).contains(&stop) {
        return Err(format!("grid needs 0 <= start <= stop < 1, got {start}:{stop}"));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(format!("grid step must be positive, got {step}"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    // rounding keeps printed values free of accumulated float noise
    Ok((0..count).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect())
}
