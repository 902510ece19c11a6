use num_complex::Complex64;

/// Classical fixed-step fourth-order Runge–Kutta stepper over a complex state vector.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        let zero = vec![Complex64::new(0.0, 0.0); dim];
        Self {
            k1: zero.clone(),
            k2: zero.clone(),
            k3: zero.clone(),
            k4: zero.clone(),
            scratch: zero,
        }
    }

    /// Advances `y` from `t` to `t + h` in place.
    pub fn step<F>(&mut self, f: &mut F, t: f64, y: &mut [Complex64], h: f64)
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let n = y.len();
        let half = 0.5 * h;

        f(t, y, &mut self.k1);
        for i in 0..n {
            self.scratch[i] = y[i] + self.k1[i] * half;
        }
        f(t + half, &self.scratch, &mut self.k2);
        for i in 0..n {
            self.scratch[i] = y[i] + self.k2[i] * half;
        }
        f(t + half, &self.scratch, &mut self.k3);
        for i in 0..n {
            self.scratch[i] = y[i] + self.k3[i] * h;
        }
        f(t + h, &self.scratch, &mut self.k4);

        let sixth = h / 6.0;
        for i in 0..n {
            y[i] += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * sixth;
        }
    }
}
