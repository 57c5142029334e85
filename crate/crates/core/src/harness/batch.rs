//! Order-preserving batch execution of independent runs.

/// Applies `f` to every item, in parallel when the `parallel` feature is on.
/// Results come back in input order either way.
pub fn map_runs<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_runs_sequential(items, f)
    }
}

pub fn map_runs_sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let xs: Vec<u64> = (0..500).collect();
        let f = |x: &u64| x.wrapping_mul(0x9e37_79b9_7f4a_7c15) >> 7;
        assert_eq!(map_runs(&xs, f), map_runs_sequential(&xs, f));
    }
}
