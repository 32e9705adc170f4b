//! Two-parameter Nelder–Mead minimizer.

pub(crate) struct Minimum {
    pub point: [f64; 2],
    pub value: f64,
}

/// Minimizes `f` starting from a simplex at `start` with edge `step`.
/// Stops when the spread of simplex values falls below `ftol` or after
/// `max_iter` iterations.
pub(crate) fn nelder_mead<F>(
    f: F,
    start: [f64; 2],
    step: f64,
    ftol: f64,
    max_iter: usize,
) -> Minimum
where
    F: Fn([f64; 2]) -> f64,
{
    let mut simplex = [
        start,
        [start[0] + step, start[1]],
        [start[0], start[1] + step],
    ];
    let mut values = simplex.map(&f);

    for _ in 0..max_iter {
        // Order best to worst; ties keep their original position.
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);

        if values[2] - values[0] <= ftol {
            break;
        }

        let centroid = [
            0.5 * (simplex[0][0] + simplex[1][0]),
            0.5 * (simplex[0][1] + simplex[1][1]),
        ];
        let along = |t: f64| {
            [
                centroid[0] + t * (simplex[2][0] - centroid[0]),
                centroid[1] + t * (simplex[2][1] - centroid[1]),
            ]
        };

        let reflected = along(-1.0);
        let fr = f(reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(expanded);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
            continue;
        }
        if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
            continue;
        }
        let contracted = if fr < values[2] {
            along(-0.5)
        } else {
            along(0.5)
        };
        let fc = f(contracted);
        if fc < values[2].min(fr) {
            simplex[2] = contracted;
            values[2] = fc;
            continue;
        }
        // Shrink toward the best vertex.
        for i in 1..3 {
            simplex[i] = [
                simplex[0][0] + 0.5 * (simplex[i][0] - simplex[0][0]),
                simplex[0][1] + 0.5 * (simplex[i][1] - simplex[0][1]),
            ];
            values[i] = f(simplex[i]);
        }
    }

    let best = (0..3)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap();
    Minimum {
        point: simplex[best],
        value: values[best],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_minimum() {
        let m = nelder_mead(
            |[x, y]| (x - 1.0).powi(2) + 3.0 * (y + 0.5).powi(2),
            [0.0, 0.0],
            0.3,
            1e-14,
            1000,
        );
        assert!((m.point[0] - 1.0).abs() < 1e-5);
        assert!((m.point[1] + 0.5).abs() < 1e-5);
        assert!(m.value < 1e-12);
    }

    #[test]
    fn rosenbrock() {
        let m = nelder_mead(
            |[x, y]| (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2),
            [-1.2, 1.0],
            0.5,
            1e-16,
            5000,
        );
        assert!((m.point[0] - 1.0).abs() < 1e-4, "{:?}", m.point);
    }

    #[test]
    fn flat_function_stays_put() {
        let m = nelder_mead(|_| 2.0, [0.25, 0.5], 0.1, 1e-9, 100);
        assert_eq!(m.point, [0.25, 0.5]);
        assert_eq!(m.value, 2.0);
    }
}
