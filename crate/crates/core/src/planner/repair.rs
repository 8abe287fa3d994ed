use super::{angles_ok, validate, Environment, SpaceTimeConstraint};
use crate::error::{Error, Result};
use crate::geometry::{angle_at_vertex, Point, Polyline};

const BISECTION_STEPS: usize = 16;

fn angle_or_zero(pts: &[Point], i: usize) -> f64 {
    if i == 0 || i + 1 >= pts.len() {
        return 180.0;
    }
    angle_at_vertex(pts[i - 1], pts[i], pts[i + 1]).unwrap_or(0.0)
}

struct Ctx<'a> {
    alpha: f64,
    radius: f64,
    speed: f64,
    env: &'a Environment,
    constraints: &'a [SpaceTimeConstraint],
}

impl Ctx<'_> {
    fn valid(&self, pts: &[Point]) -> bool {
        match Polyline::new(pts.iter().copied()) {
            Ok(path) if path.len() == pts.len() => {
                validate(&path, self.speed, self.radius, self.env, self.constraints)
            }
            _ => false,
        }
    }

    fn try_eliminate(&self, pts: &[Point], i: usize) -> Option<Vec<Point>> {
        let mut cand = pts.to_vec();
        cand.remove(i);
        // the bridged vertex's neighbours are now at i-1 and i
        let left_ok = angle_or_zero(&cand, i - 1) >= self.alpha;
        let right_ok = angle_or_zero(&cand, i) >= self.alpha;
        (left_ok && right_ok && self.valid(&cand)).then_some(cand)
    }

    /// Moves vertex `i` along the perpendicular toward the line through its
    /// neighbours, as close to that line as validity allows.
    fn try_move(&self, pts: &[Point], i: usize) -> Option<Vec<Point>> {
        let (a, v, b) = (pts[i - 1], pts[i], pts[i + 1]);
        let ab = b - a;
        let len2 = ab.dot(ab);
        if len2 == 0.0 {
            return None;
        }
        let foot = a + ab * ((v - a).dot(ab) / len2);

        let at = |t: f64| {
            let mut cand = pts.to_vec();
            cand[i] = v.lerp(foot, t);
            cand
        };
        let angle_ok = |cand: &[Point]| {
            angle_or_zero(cand, i) >= self.alpha && angle_or_zero(cand, i - 1) >= self.alpha
        };
        let ok = |t: f64| {
            let cand = at(t);
            angle_ok(&cand) && self.valid(&cand)
        };

        if ok(1.0) {
            return Some(at(1.0));
        }
        // smallest travel reaching the angle bound
        if !angle_ok(&at(1.0)) {
            return None;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if angle_ok(&at(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let t_angle = hi;
        if !ok(t_angle) {
            return None;
        }
        // largest travel still valid
        let (mut lo, mut hi) = (t_angle, 1.0);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(at(lo))
    }
}

/// Enforces the minimum turning angle on a raw path in one ordered pass.
///
/// Each acute vertex is first eliminated (bridging its neighbours) and
/// otherwise moved toward the line through its neighbours. Fails when a
/// vertex stays below `alpha_deg`.
pub fn repair_angles(
    path: &Polyline,
    alpha_deg: f64,
    agent_radius: f64,
    env: &Environment,
    constraints: &[SpaceTimeConstraint],
    speed: f64,
) -> Result<Polyline> {
    if path.len() < 2 {
        return Err(Error::InvalidInput("angle repair needs at least two points".into()));
    }
    let ctx = Ctx {
        alpha: alpha_deg,
        radius: agent_radius,
        speed,
        env,
        constraints,
    };
    let mut pts = path.points().to_vec();
    let mut i = 1;
    while i + 1 < pts.len() {
        if angle_or_zero(&pts, i) >= alpha_deg {
            i += 1;
            continue;
        }
        if let Some(next) = ctx.try_eliminate(&pts, i) {
            pts = next;
            continue;
        }
        match ctx.try_move(&pts, i) {
            Some(next) => {
                pts = next;
                i += 1;
            }
            None => {
                return Err(Error::PlanningFailure(format!(
                    "vertex {i} at {:?} cannot reach {alpha_deg}°",
                    pts[i]
                )))
            }
        }
    }
    let out = Polyline::new(pts)?;
    if !angles_ok(&out, alpha_deg) {
        return Err(Error::PlanningFailure("angle repair left an acute vertex".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn open() -> Environment {
        Environment::empty(10., 10.)
    }

    fn shift(pts: &[Point]) -> Polyline {
        Polyline::new(pts.iter().map(|q| *q + p(3., 3.))).unwrap()
    }

    #[test]
    fn straight_path_unchanged() {
        let path = shift(&[p(0., 0.), p(1., 0.), p(2., 0.)]);
        let out = repair_angles(&path, 90.0, 0.1, &open(), &[], 1.0).unwrap();
        assert_eq!(out, path);
    }

    #[test]
    fn acute_vertex_eliminated() {
        let path = shift(&[p(0., 0.), p(2., 0.), p(0., 0.2)]);
        // angle at (2,0) is about 5.7°
        let a = angle_at_vertex(path.points()[0], path.points()[1], path.points()[2]).unwrap();
        assert!((a - (0.1f64).atan().to_degrees()).abs() < 1e-9);
        let out = repair_angles(&path, 90.0, 0.05, &open(), &[], 1.0).unwrap();
        assert_eq!(out, shift(&[p(0., 0.), p(0., 0.2)]));
    }

    #[test]
    fn blocked_bridge_with_foot_at_endpoint_fails() {
        // the perpendicular from (2,0) meets the neighbour line at (0,0) itself,
        // so no position along it reaches 90° before degenerating
        let env = Environment::new(10., 10., vec![Rect::new(2.5, 3.05, 0.6, 0.1)]);
        let path = shift(&[p(0., 0.), p(2., 0.), p(0., 0.2)]);
        assert!(validate(&path, 1.0, 0.01, &env, &[]));
        assert!(repair_angles(&path, 90.0, 0.01, &env, &[], 1.0).is_err());
    }

    #[test]
    fn blocked_bridge_moves_vertex_toward_neighbour_line() {
        // bridge (0,0)–(2,0) is blocked by a low obstacle under the apex
        let env = Environment::new(10., 10., vec![Rect::new(3.8, 2.5, 0.4, 0.6)]);
        let path = shift(&[p(0., 0.), p(1., 2.), p(2., 0.)]);
        let radius = 0.1;
        assert!(validate(&path, 1.0, radius, &env, &[]));
        assert!(path.min_angle().unwrap() < 90.0);

        let out = repair_angles(&path, 90.0, radius, &env, &[], 1.0).unwrap();
        assert_eq!(out.len(), 3);
        let moved = out.points()[1];
        // moved straight down the perpendicular x = 1
        assert!((moved.x - 4.0).abs() < 1e-9);
        assert!(moved.y < 5.0);
        assert!(angles_ok(&out, 90.0));
        assert!(validate(&out, 1.0, radius, &env, &[]));
        // close to the obstacle: a bit further down is no longer valid
        let mut closer = out.points().to_vec();
        closer[1].y -= 0.01;
        let closer = Polyline::new(closer).unwrap();
        assert!(!validate(&closer, 1.0, radius, &env, &[]));
    }

    #[test]
    fn single_segment_is_untouched() {
        let path = shift(&[p(0., 0.), p(1., 1.)]);
        assert_eq!(repair_angles(&path, 90.0, 0.1, &open(), &[], 1.0).unwrap(), path);
    }
}
