//! Piecewise-constant pump-current waveforms.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    /// Start time [s]; the segment runs until the next start.
    pub start: f64,
    /// Current [A].
    pub current: f64,
}

/// Timing of a gain-switched slave pulse train. Pulse `j` occupies
/// `[j T + lead, j T + lead + width]` with `lead = (T - width)/2`, so the gap
/// after pulse `j` is centred on `(j + 1) T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlaveTiming {
    pub period: f64,
    pub width: f64,
    pub i_low: f64,
    pub i_high: f64,
    pub n_pulses: usize,
}

impl SlaveTiming {
    pub fn lead(&self) -> f64 {
        0.5 * (self.period - self.width)
    }

    pub fn pulse_start(&self, j: usize) -> f64 {
        j as f64 * self.period + self.lead()
    }

    pub fn pulse_end(&self, j: usize) -> f64 {
        self.pulse_start(j) + self.width
    }

    /// Centre of the gap between pulse `j` and pulse `j + 1`.
    pub fn gap_center(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.period
    }

    /// Default analysis gate: the pulse window with 20% trimmed from each edge.
    pub fn gate(&self, j: usize) -> (f64, f64) {
        let trim = 0.2 * self.width;
        (self.pulse_start(j) + trim, self.pulse_end(j) - trim)
    }

    /// Time covered by the whole train.
    pub fn span(&self) -> f64 {
        self.n_pulses as f64 * self.period
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    /// Gap index: the window sits between slave pulses `gap` and `gap + 1`.
    pub gap: usize,
    pub center: f64,
    pub duration: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveWaveform {
    segments: Vec<Segment>,
    pub slave_timing: Option<SlaveTiming>,
    pub perturbations: Vec<Perturbation>,
}

impl DriveWaveform {
    pub fn constant(current: f64) -> Result<Self> {
        Self::from_segments(vec![Segment { start: 0.0, current }])
    }

    /// Segments must be non-empty, strictly increasing in start time, with
    /// finite non-negative currents. Before the first start the waveform holds
    /// the first segment's current.
    pub fn from_segments(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invalid("drive", "no segments"));
        }
        for (k, s) in segments.iter().enumerate() {
            if !s.start.is_finite() {
                return Err(Error::invalid("drive", format!("segment {k} start is not finite")));
            }
            if !(s.current.is_finite() && s.current >= 0.0) {
                return Err(Error::invalid(
                    "drive",
                    format!("segment {k} current {} must be finite and >= 0", s.current),
                ));
            }
            if k > 0 && s.start <= segments[k - 1].start {
                return Err(Error::invalid("drive", "segment starts must increase"));
            }
        }
        Ok(DriveWaveform {
            segments,
            slave_timing: None,
            perturbations: Vec::new(),
        })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    fn index_at(&self, t: f64) -> usize {
        self.segments.partition_point(|s| s.start <= t).saturating_sub(1)
    }

    pub fn current_at(&self, t: f64) -> f64 {
        self.segments[self.index_at(t)].current
    }

    /// Same waveform but held at `i_off` before `t_on`.
    pub fn switched_on_at(&self, t_on: f64, i_off: f64) -> Result<Self> {
        let mut segs = vec![
            Segment { start: t_on.min(0.0) - 1.0, current: i_off },
            Segment { start: t_on, current: self.current_at(t_on) },
        ];
        segs.extend(self.segments.iter().copied().filter(|s| s.start > t_on));
        let mut out = Self::from_segments(segs)?;
        out.slave_timing = self.slave_timing;
        out.perturbations = self.perturbations.clone();
        Ok(out)
    }

    /// Sequential reader for monotonically increasing query times.
    pub fn cursor(&self) -> DriveCursor<'_> {
        DriveCursor { drive: self, idx: 0 }
    }
}

pub struct DriveCursor<'a> {
    drive: &'a DriveWaveform,
    idx: usize,
}

impl DriveCursor<'_> {
    #[inline]
    pub fn current_at(&mut self, t: f64) -> f64 {
        let segs = &self.drive.segments;
        while self.idx + 1 < segs.len() && segs[self.idx + 1].start <= t {
            self.idx += 1;
        }
        segs[self.idx].current
    }
}

/// Rectangular pulse train between `i_low` and `i_high`.
pub fn build_slave_drive(
    period: f64,
    width: f64,
    i_low: f64,
    i_high: f64,
    n_pulses: usize,
) -> Result<DriveWaveform> {
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::invalid("period", "must be > 0"));
    }
    if !(width > 0.0 && width < period) {
        return Err(Error::invalid("pulse_width", "must lie in (0, period)"));
    }
    if !(i_low >= 0.0 && i_high.is_finite()) {
        return Err(Error::invalid("I_low", "currents must be finite and >= 0"));
    }
    if i_low > i_high {
        return Err(Error::invalid("I_high", "must not be below I_low"));
    }
    if n_pulses == 0 {
        return Err(Error::invalid("n_pulses", "must be >= 1"));
    }
    let timing = SlaveTiming {
        period,
        width,
        i_low,
        i_high,
        n_pulses,
    };
    let mut drive = if i_low == i_high {
        DriveWaveform::constant(i_low)?
    } else {
        let mut segs = Vec::with_capacity(2 * n_pulses + 1);
        segs.push(Segment { start: 0.0, current: i_low });
        for j in 0..n_pulses {
            segs.push(Segment { start: timing.pulse_start(j), current: i_high });
            segs.push(Segment { start: timing.pulse_end(j), current: i_low });
        }
        DriveWaveform::from_segments(segs)?
    };
    drive.slave_timing = Some(timing);
    Ok(drive)
}

/// Constant master current `i_s` with rectangular excursions of length `d`
/// centred in the listed gaps of the slave train.
pub fn build_master_drive(
    i_s: f64,
    perturbations: &[(usize, f64)],
    d: f64,
    timing: &SlaveTiming,
) -> Result<DriveWaveform> {
    if !(i_s.is_finite() && i_s >= 0.0) {
        return Err(Error::invalid("I_s", "must be finite and >= 0"));
    }
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::invalid("d", "must be > 0"));
    }
    let mut list: Vec<(usize, f64)> = perturbations.to_vec();
    list.sort_by_key(|&(j, _)| j);
    let mut segs = vec![Segment { start: 0.0, current: i_s }];
    let mut windows = Vec::with_capacity(list.len());
    for (k, &(j, amp)) in list.iter().enumerate() {
        if k > 0 && list[k - 1].0 == j {
            return Err(Error::invalid("perturbations", format!("gap {j} listed twice")));
        }
        if j + 1 >= timing.n_pulses {
            return Err(Error::invalid(
                "perturbations",
                format!("gap {j} is not between two of the {} pulses", timing.n_pulses),
            ));
        }
        let c = timing.gap_center(j);
        let (lo, hi) = (c - 0.5 * d, c + 0.5 * d);
        if !(lo > timing.pulse_end(j) && hi < timing.pulse_start(j + 1)) {
            return Err(Error::invalid(
                "d",
                format!("window of {d:e} s around gap {j} overlaps a slave pulse"),
            ));
        }
        let current = i_s + amp;
        if !(current.is_finite() && current >= 0.0) {
            return Err(Error::invalid("perturbations", format!("gap {j} drives a negative current")));
        }
        if amp != 0.0 {
            segs.push(Segment { start: lo, current });
            segs.push(Segment { start: hi, current: i_s });
        }
        windows.push(Perturbation {
            gap: j,
            center: c,
            duration: d,
            amplitude: amp,
        });
    }
    let mut drive = DriveWaveform::from_segments(segs)?;
    drive.perturbations = windows;
    Ok(drive)
}
