//! Full-batch subgradient training of the linear SVM.
//!
//! Each iteration needs the set of margin violators `y·(w·x + b) < 1`.
//! Rather than rescanning every point, margins are computed in full at a
//! reference `(w_ref, b_ref)` and points are ordered by their distance to
//! the margin boundary. A point's margin can move by at most
//! `R·|w − w_ref| + |b − b_ref|` (R the largest feature norm), so only the
//! points within that distance are re-tested. Violator sums are kept up to
//! date as points change status and recomputed at every refresh.

/// Rechecked points beyond which the reference is rebuilt, as a fraction of n.
const BAND_FRACTION: usize = 16;
const MIN_BAND: usize = 64;

struct Violators<'a> {
    /// `y·x` per point.
    a: &'a [[f64; 2]],
    y: &'a [f64],
    radius: f64,
    violating: Vec<bool>,
    sum_a: [f64; 2],
    sum_y: f64,
    /// Point indices by increasing distance to the boundary at the reference.
    order: Vec<usize>,
    dist: Vec<f64>,
    /// Distance of the nearest point not in `order`.
    horizon: f64,
    w_ref: [f64; 2],
    b_ref: f64,
    reach: f64,
    checked: usize,
}

fn margin(a: [f64; 2], y: f64, w: [f64; 2], b: f64) -> f64 {
    a[0] * w[0] + a[1] * w[1] + y * b
}

impl<'a> Violators<'a> {
    fn new(a: &'a [[f64; 2]], y: &'a [f64], w: [f64; 2], b: f64) -> Self {
        let radius = a.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
        let mut v = Violators {
            a,
            y,
            radius,
            violating: vec![false; a.len()],
            sum_a: [0.0; 2],
            sum_y: 0.0,
            order: Vec::new(),
            dist: Vec::new(),
            horizon: f64::INFINITY,
            w_ref: w,
            b_ref: b,
            reach: 0.0,
            checked: 0,
        };
        v.refresh(w, b);
        v
    }

    fn refresh(&mut self, w: [f64; 2], b: f64) {
        let n = self.a.len();
        let mut dist = Vec::with_capacity(n);
        self.sum_a = [0.0; 2];
        self.sum_y = 0.0;
        for i in 0..n {
            let m = margin(self.a[i], self.y[i], w, b);
            let viol = m < 1.0;
            self.violating[i] = viol;
            if viol {
                self.sum_a[0] += self.a[i][0];
                self.sum_a[1] += self.a[i][1];
                self.sum_y += self.y[i];
            }
            dist.push(((m - 1.0).abs(), i));
        }
        let band = (n / BAND_FRACTION).max(MIN_BAND);
        if band < n {
            dist.select_nth_unstable_by(band, |p, q| p.0.total_cmp(&q.0));
            self.horizon = dist[band].0;
            dist.truncate(band);
        } else {
            self.horizon = f64::INFINITY;
        }
        dist.sort_unstable_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
        self.order = dist.iter().map(|p| p.1).collect();
        self.dist = dist.into_iter().map(|p| p.0).collect();
        self.w_ref = w;
        self.b_ref = b;
        self.reach = 0.0;
        self.checked = 0;
    }

    /// Brings violator status and sums up to date for `(w, b)`.
    fn update(&mut self, w: [f64; 2], b: f64) {
        let dw = (w[0] - self.w_ref[0]).hypot(w[1] - self.w_ref[1]);
        let shift = self.radius * dw + (b - self.b_ref).abs();
        // Slack for rounding in the margin evaluation itself.
        let slack = 1e-12 * (1.0 + self.radius * w[0].hypot(w[1]) + b.abs());
        self.reach = self.reach.max(shift * (1.0 + 1e-12) + slack);
        if self.reach >= self.horizon {
            self.refresh(w, b);
            return;
        }
        while self.checked < self.dist.len() && self.dist[self.checked] <= self.reach {
            self.checked += 1;
        }
        for &i in &self.order[..self.checked] {
            let viol = margin(self.a[i], self.y[i], w, b) < 1.0;
            if viol != self.violating[i] {
                let s = if viol { 1.0 } else { -1.0 };
                self.sum_a[0] += s * self.a[i][0];
                self.sum_a[1] += s * self.a[i][1];
                self.sum_y += s * self.y[i];
                self.violating[i] = viol;
            }
        }
    }
}

/// Minimizes `λ/2·|w|² + mean(max(0, 1 − y(w·x + b)))` by full-batch
/// subgradient steps of size `1/(λt)`, `t = 1..=iterations`, from zero.
/// The bias is unregularized.
pub(super) fn train(x: &[[f64; 2]], y: &[f64], lambda: f64, iterations: usize) -> ([f64; 2], f64) {
    let n = x.len() as f64;
    let a: Vec<[f64; 2]> = x
        .iter()
        .zip(y)
        .map(|(x, &y)| [y * x[0], y * x[1]])
        .collect();
    let mut w = [0.0; 2];
    let mut b = 0.0;
    let mut viol = Violators::new(&a, y, w, b);
    for t in 1..=iterations {
        if t > 1 {
            viol.update(w, b);
        }
        let eta = 1.0 / (lambda * t as f64);
        let gw = [
            lambda * w[0] - viol.sum_a[0] / n,
            lambda * w[1] - viol.sum_a[1] / n,
        ];
        let gb = -viol.sum_y / n;
        w[0] -= eta * gw[0];
        w[1] -= eta * gw[1];
        b -= eta * gb;
    }
    (w, b)
}
