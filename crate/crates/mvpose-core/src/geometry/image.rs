//! 8-bit RGB images rendered by the simulator and consumed by the
//! visual feature provider.

#[derive(Debug, Clone)]
pub struct ColorImage {
    pub width: u32,
    pub height: u32,
    data: Vec<[u8; 3]>,
}

impl ColorImage {
    pub fn new_filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        Self {
            width,
            height,
            data: vec![rgb; width as usize * height as usize],
        }
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<[u8; 3]>) -> Self {
        assert_eq!(data.len(), width as usize * height as usize);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> [u8; 3] {
        self.data[row * self.width as usize + col]
    }

    pub fn set(&mut self, row: usize, col: usize, rgb: [u8; 3]) {
        self.data[row * self.width as usize + col] = rgb;
    }

    /// RGB in `[0, 1]`.
    pub fn get_unit(&self, row: usize, col: usize) -> [f64; 3] {
        let [r, g, b] = self.get(row, col);
        [
            f64::from(r) / 255.0,
            f64::from(g) / 255.0,
            f64::from(b) / 255.0,
        ]
    }

    /// Luminance in `[0, 1]` (Rec. 601 weights).
    pub fn luminance(&self, row: usize, col: usize) -> f64 {
        let [r, g, b] = self.get_unit(row, col);
        0.299 * r + 0.587 * g + 0.114 * b
    }

    pub fn raw(&self) -> &[[u8; 3]] {
        &self.data
    }
}
