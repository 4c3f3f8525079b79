//! Separable sliding-window minimum with edge clipping.
//!
//! A monotonic deque gives O(n) per line independent of the window radius;
//! the 2D filter runs rows then columns, which equals the full 2D window
//! minimum because min is separable. Windows are clipped at image bounds
//! rather than padded.

use std::collections::VecDeque;

/// Minimum over the clipped window `[i-radius, i+radius]` for every index.
pub fn min_filter_1d(input: &[f32], radius: usize, out: &mut Vec<f32>) {
    out.clear();
    let n = input.len();
    if n == 0 {
        return;
    }
    let mut deque: VecDeque<usize> = VecDeque::new();
    for i in 0..n + radius {
        if i < n {
            while let Some(&back) = deque.back() {
                if input[back] >= input[i] {
                    deque.pop_back();
                } else {
                    break;
                }
            }
            deque.push_back(i);
        }
        if i >= radius {
            let j = i - radius;
            if j >= n {
                break;
            }
            while let Some(&front) = deque.front() {
                if front + radius < j {
                    deque.pop_front();
                } else {
                    break;
                }
            }
            out.push(input[*deque.front().expect("window never empty")]);
        }
    }
}

/// 2D window minimum over `(2·radius+1)²` clipped windows, row-major input.
pub fn min_filter_2d(input: &[f32], width: usize, height: usize, radius: usize) -> Vec<f32> {
    debug_assert_eq!(input.len(), width * height);
    let mut row_min = vec![0.0f32; width * height];
    let mut line = Vec::with_capacity(width.max(height));

    for y in 0..height {
        min_filter_1d(&input[y * width..(y + 1) * width], radius, &mut line);
        row_min[y * width..(y + 1) * width].copy_from_slice(&line);
    }

    let mut out = vec![0.0f32; width * height];
    let mut column = Vec::with_capacity(height);
    for x in 0..width {
        column.clear();
        column.extend((0..height).map(|y| row_min[y * width + x]));
        min_filter_1d(&column, radius, &mut line);
        for (y, &v) in line.iter().enumerate() {
            out[y * width + x] = v;
        }
    }
    out
}
