use super::BinaryRaster;

/// Foreground count per column.
pub fn column_profile(img: &BinaryRaster) -> Vec<usize> {
    let mut p = vec![0usize; img.width()];
    for y in 0..img.height() {
        for (x, c) in p.iter_mut().enumerate() {
            if img.get(x, y) {
                *c += 1;
            }
        }
    }
    p
}

/// Number of maximal column runs whose sum exceeds half the profile maximum.
pub fn vertical_projection_peaks(img: &BinaryRaster) -> usize {
    let p = column_profile(img);
    let max = p.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return 0;
    }
    let mut peaks = 0;
    let mut inside = false;
    for &c in &p {
        // c > max/2 without rounding
        let above = 2 * c > max;
        if above && !inside {
            peaks += 1;
        }
        inside = above;
    }
    peaks
}
