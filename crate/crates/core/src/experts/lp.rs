//! Incremental 2-D linear programming over half-planes inside a speed disc.

use crate::geometry::Vec2;

const LP_EPS: f64 = 1e-12;

/// Half-plane bounded by the line through `point` along unit `direction`.
/// Velocities to the left of `direction` are admissible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub point: Vec2,
    pub direction: Vec2,
}

impl HalfPlane {
    /// Half-plane `{v : n·v >= offset}` for unit inward normal `n`.
    pub fn from_normal(normal: Vec2, offset: f64) -> Self {
        HalfPlane {
            point: normal * offset,
            direction: Vec2::new(normal.y, -normal.x),
        }
    }

    /// Signed violation: positive when `v` is outside.
    pub fn violation(&self, v: Vec2) -> f64 {
        self.direction.cross(self.point - v)
    }

    pub fn contains(&self, v: Vec2, tol: f64) -> bool {
        self.violation(v) <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("half-planes {failed_at}.. have an empty intersection with the speed disc")]
pub struct Infeasible {
    /// Index of the first constraint that could not be satisfied.
    pub failed_at: usize,
    /// Best point found for the constraints before `failed_at`.
    pub partial: Vec2,
}

/// Point in every half-plane and the disc of `radius`, nearest to `preferred`.
pub fn solve_lp2d(
    constraints: &[HalfPlane],
    preferred: Vec2,
    radius: f64,
) -> Result<Vec2, Infeasible> {
    assert!(radius > 0.0, "radius bound must be positive");
    let (failed_at, result) = lp2(constraints, radius, preferred, false);
    if failed_at < constraints.len() {
        Err(Infeasible {
            failed_at,
            partial: result,
        })
    } else {
        Ok(result)
    }
}

/// Velocity minimizing the largest violation among `constraints[begin..]`
/// while keeping the first `hard` constraints satisfied.
pub fn safest_velocity(
    constraints: &[HalfPlane],
    hard: usize,
    begin: usize,
    radius: f64,
    mut result: Vec2,
) -> Vec2 {
    let mut distance = 0.0;
    for i in begin..constraints.len() {
        let ci = &constraints[i];
        if ci.violation(result) > distance {
            let mut projected: Vec<HalfPlane> = constraints[..hard].to_vec();
            for cj in &constraints[hard..i] {
                let denom = ci.direction.cross(cj.direction);
                let point = if denom.abs() <= LP_EPS {
                    if ci.direction.dot(cj.direction) > 0.0 {
                        continue;
                    }
                    (ci.point + cj.point) * 0.5
                } else {
                    ci.point + ci.direction * (cj.direction.cross(ci.point - cj.point) / denom)
                };
                projected.push(HalfPlane {
                    point,
                    direction: (cj.direction - ci.direction).normalized(),
                });
            }
            let temp = result;
            let opt = Vec2::new(-ci.direction.y, ci.direction.x);
            let (fail, r) = lp2(&projected, radius, opt, true);
            result = if fail < projected.len() { temp } else { r };
            distance = ci.violation(result);
        }
    }
    result
}

fn lp1(
    lines: &[HalfPlane],
    line_no: usize,
    radius: f64,
    opt: Vec2,
    direction_opt: bool,
) -> Option<Vec2> {
    let line = &lines[line_no];
    let dot = line.point.dot(line.direction);
    let disc = dot * dot + radius * radius - line.point.norm_sq();
    if disc < 0.0 {
        return None;
    }
    let sqrt_disc = disc.sqrt();
    let mut t_left = -dot - sqrt_disc;
    let mut t_right = -dot + sqrt_disc;

    for other in &lines[..line_no] {
        let denom = line.direction.cross(other.direction);
        let numer = other.direction.cross(line.point - other.point);
        if denom.abs() <= LP_EPS {
            if numer < 0.0 {
                return None;
            }
            continue;
        }
        let t = numer / denom;
        if denom >= 0.0 {
            t_right = t_right.min(t);
        } else {
            t_left = t_left.max(t);
        }
        if t_left > t_right {
            return None;
        }
    }

    let t = if direction_opt {
        if opt.dot(line.direction) > 0.0 {
            t_right
        } else {
            t_left
        }
    } else {
        line.direction.dot(opt - line.point).clamp(t_left, t_right)
    };
    Some(line.point + line.direction * t)
}

fn lp2(lines: &[HalfPlane], radius: f64, opt: Vec2, direction_opt: bool) -> (usize, Vec2) {
    let mut result = if direction_opt {
        opt * radius
    } else if opt.norm_sq() > radius * radius {
        opt.normalized() * radius
    } else {
        opt
    };
    for i in 0..lines.len() {
        if lines[i].violation(result) > 0.0 {
            match lp1(lines, i, radius, opt, direction_opt) {
                Some(r) => result = r,
                None => return (i, result),
            }
        }
    }
    (lines.len(), result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_returns_preferred() {
        let p = Vec2::new(0.3, -0.4);
        assert_eq!(solve_lp2d(&[], p, 1.5).unwrap(), p);
    }

    #[test]
    fn preferred_outside_disc_is_projected() {
        let v = solve_lp2d(&[], Vec2::new(3.0, 0.0), 1.5).unwrap();
        assert!((v - Vec2::new(1.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn single_half_plane_projection() {
        // x <= 0  <=>  (-1, 0)·v >= 0
        let h = HalfPlane::from_normal(Vec2::new(-1.0, 0.0), 0.0);
        let v = solve_lp2d(&[h], Vec2::new(1.0, 0.0), 1.5).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn contradictory_constraints_are_infeasible() {
        let a = HalfPlane::from_normal(Vec2::new(1.0, 0.0), 0.5); // x >= 0.5
        let b = HalfPlane::from_normal(Vec2::new(-1.0, 0.0), 0.5); // x <= -0.5
        let err = solve_lp2d(&[a, b], Vec2::ZERO, 1.5).unwrap_err();
        assert_eq!(err.failed_at, 1);
        let safe = safest_velocity(&[a, b], 0, err.failed_at, 1.5, err.partial);
        // minimizing the max violation splits the difference
        assert!(safe.x.abs() < 1e-9);
    }
}
