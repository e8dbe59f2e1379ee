//! Shared 2D FFT plans (rustfft), cached per transform length.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plan_cache() -> &'static Mutex<HashMap<usize, Arc<Plans>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn plans(n: usize) -> Arc<Plans> {
    let mut cache = plan_cache().lock().unwrap();
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// Unnormalized 2D DFT in place on a row-major n×n buffer.
pub fn fft2(buf: &mut [Complex<f64>], n: usize, inverse: bool) {
    debug_assert_eq!(buf.len(), n * n);
    let plans = plans(n);
    let fft = if inverse { &plans.inverse } else { &plans.forward };
    let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
    // rows are contiguous
    for row in buf.chunks_exact_mut(n) {
        fft.process_with_scratch(row, &mut scratch);
    }
    // columns via gather/scatter
    let mut col = vec![Complex::default(); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = buf[i * n + j];
        }
        fft.process_with_scratch(&mut col, &mut scratch);
        for i in 0..n {
            buf[i * n + j] = col[i];
        }
    }
}
