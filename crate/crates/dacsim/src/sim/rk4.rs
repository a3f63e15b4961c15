//! Classical fixed-step fourth-order Runge-Kutta integration.

use nalgebra::DVector;

use crate::{real, Scalar};

/// One RK4 step of `dy/dt = f(t, y)` from `t` with step `dt`.
pub fn step<T, F>(f: &mut F, t: T, y: &DVector<T>, dt: T) -> DVector<T>
where
    T: Scalar,
    F: FnMut(T, &DVector<T>) -> DVector<T>,
{
    let half = dt / real(2.0);
    let k1 = f(t, y);
    let k2 = f(t + half, &(y + &k1 * half));
    let k3 = f(t + half, &(y + &k2 * half));
    let k4 = f(t + dt, &(y + &k3 * dt));
    let two = real::<T>(2.0);
    y + (k1 + k2 * two + k3 * two + k4) * (dt / real(6.0))
}

/// Integrates `steps` uniform RK4 steps from `(t0, y0)` and returns the
/// final state. Step times are computed as `t0 + k*dt` to avoid drift.
pub fn integrate<T, F>(f: &mut F, t0: T, y0: DVector<T>, dt: T, steps: usize) -> DVector<T>
where
    T: Scalar,
    F: FnMut(T, &DVector<T>) -> DVector<T>,
{
    let mut y = y0;
    for k in 0..steps {
        let t = t0 + dt * real(k as f64);
        y = step(f, t, &y, dt);
    }
    y
}
