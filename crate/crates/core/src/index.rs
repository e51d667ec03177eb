//! Row-major index arithmetic shared by the grid-sweeping modules.

/// Strides for row-major layout with the last axis fastest.
pub(crate) fn strides(sizes: &[usize]) -> Vec<usize> {
    let mut st = vec![1usize; sizes.len()];
    for k in (0..sizes.len().saturating_sub(1)).rev() {
        st[k] = st[k + 1] * sizes[k + 1];
    }
    st
}

/// Multi-index of a flat offset under the given strides.
pub(crate) fn unflatten(flat: usize, st: &[usize]) -> Vec<usize> {
    let mut rem = flat;
    st.iter()
        .map(|&s| {
            let i = rem / s;
            rem %= s;
            i
        })
        .collect()
}
