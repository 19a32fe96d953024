//! SAO/LAO classification and the inter-spike count N.
//!
//! An oscillation runs from one confirmed trough of the channel to the next.
//! Troughs and peaks are confirmed with hysteresis: a running minimum becomes
//! a trough once the channel has risen `a_t` above it, and a running maximum
//! becomes a peak once the channel has fallen `a_t` below it. Wiggles smaller
//! than `a_t` therefore never open an oscillation. The amplitude is the peak
//! minus the lower of the two bounding troughs.
//!
//! An oscillation is an LAO when its peak exceeds `m_t` and its amplitude
//! exceeds `a_t'`, and an SAO when its peak stays below `m_t` (its amplitude
//! is at least `a_t` by construction). Anything else, a high peak with a
//! small amplitude, is unresolved. With [`Thresholds::banded`] set, SAOs are
//! additionally capped at amplitude `a_t'` and larger low oscillations become
//! unresolved too.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Trajectory;

/// Amplitude and height thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// LAO peaks must exceed this value.
    pub m_t: f64,
    /// Minimal amplitude of any oscillation.
    pub a_t: f64,
    /// LAO amplitudes must exceed this value.
    pub a_t_prime: f64,
    /// Also require SAO amplitudes to stay at or below `a_t'`.
    #[serde(default)]
    pub banded: bool,
}

impl Thresholds {
    pub fn new(m_t: f64, a_t: f64, a_t_prime: f64) -> Result<Self> {
        let th = Self {
            m_t,
            a_t,
            a_t_prime,
            banded: false,
        };
        th.validate()?;
        Ok(th)
    }

    /// Thresholds for the prey channel of the original model.
    pub fn prey() -> Self {
        Self {
            m_t: 0.68,
            a_t: 0.06,
            a_t_prime: 0.3,
            banded: false,
        }
    }

    /// Thresholds for the `−Z` channel of the stochastic normal form.
    pub fn normal_form() -> Self {
        Self {
            m_t: 6.0,
            a_t: 0.1,
            a_t_prime: 3.0,
            banded: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a_t > 0.0 && self.a_t < self.a_t_prime && self.m_t > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "thresholds need 0 < a_t < a_t' and m_t > 0, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            m_t: self.m_t * c,
            a_t: self.a_t * c,
            a_t_prime: self.a_t_prime * c,
            banded: self.banded,
        }
    }

    pub fn with_banded(mut self, banded: bool) -> Self {
        self.banded = banded;
        self
    }

    pub fn classify(&self, peak: f64, amplitude: f64) -> EventKind {
        if peak > self.m_t && amplitude > self.a_t_prime {
            EventKind::Lao
        } else if peak < self.m_t
            && amplitude >= self.a_t
            && !(self.banded && amplitude > self.a_t_prime)
        {
            EventKind::Sao
        } else {
            EventKind::Unresolved
        }
    }
}

/// Scalar observable used for event detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    /// First component (prey density).
    X,
    /// Second component. Default for the normal form: an outbreak leaves
    /// the rest state with L growing and Z slightly negative, then returns
    /// through a sharp positive Z peak as prey recovers.
    Z,
    /// Negated second component.
    NegZ,
}

impl Channel {
    #[inline]
    pub fn value(self, u: [f64; 2]) -> f64 {
        match self {
            Channel::X => u[0],
            Channel::Z => u[1],
            Channel::NegZ => -u[1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Sao,
    Lao,
    /// Fails both the SAO and the LAO rule; ignored when counting N.
    Unresolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub kind: EventKind,
    pub t_start: f64,
    pub t_end: f64,
    pub t_peak: f64,
    pub peak: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EventSeq {
    pub events: Vec<Event>,
}

impl EventSeq {
    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn kinds(&self) -> Vec<EventKind> {
        self.events.iter().map(|e| e.kind).collect()
    }
}

#[derive(Debug, Clone, Copy)]
enum Phase {
    /// No trough confirmed yet.
    Seeking,
    /// After a trough, looking for a peak.
    Rising,
    /// After a peak, looking for the closing trough.
    Falling,
}

/// Incremental event detector; feed samples with [`push`](Self::push).
#[derive(Debug, Clone)]
pub struct EventDetector {
    th: Thresholds,
    phase: Phase,
    // running extremum and its time
    ext: f64,
    t_ext: f64,
    // current oscillation
    trough: f64,
    t_trough: f64,
    peak: f64,
    t_peak: f64,
    events: Vec<Event>,
}

impl EventDetector {
    pub fn new(th: Thresholds) -> Self {
        Self {
            th,
            phase: Phase::Seeking,
            ext: f64::INFINITY,
            t_ext: 0.0,
            trough: 0.0,
            t_trough: 0.0,
            peak: 0.0,
            t_peak: 0.0,
            events: Vec::new(),
        }
    }

    fn close(&mut self, t_end: f64, end: f64) {
        let amplitude = self.peak - self.trough.min(end);
        self.events.push(Event {
            kind: self.th.classify(self.peak, amplitude),
            t_start: self.t_trough,
            t_end,
            t_peak: self.t_peak,
            peak: self.peak,
            amplitude,
        });
    }

    #[inline]
    pub fn push(&mut self, t: f64, v: f64) {
        let a = self.th.a_t;
        match self.phase {
            Phase::Seeking | Phase::Falling => {
                if v < self.ext {
                    self.ext = v;
                    self.t_ext = t;
                } else if v >= self.ext + a {
                    if let Phase::Falling = self.phase {
                        self.close(self.t_ext, self.ext);
                    }
                    self.trough = self.ext;
                    self.t_trough = self.t_ext;
                    self.phase = Phase::Rising;
                    self.ext = v;
                    self.t_ext = t;
                }
            }
            Phase::Rising => {
                if v > self.ext {
                    self.ext = v;
                    self.t_ext = t;
                } else if v <= self.ext - a {
                    self.peak = self.ext;
                    self.t_peak = self.t_ext;
                    self.phase = Phase::Falling;
                    self.ext = v;
                    self.t_ext = t;
                }
            }
        }
    }

    /// Ends the stream. An oscillation whose peak is confirmed but whose
    /// closing trough is not is closed at the running minimum.
    pub fn finish(mut self) -> EventSeq {
        if let Phase::Falling = self.phase {
            self.close(self.t_ext, self.ext);
        }
        EventSeq { events: self.events }
    }
}

/// Classifies the oscillations of one channel of `traj`.
pub fn detect_events(traj: &Trajectory, th: &Thresholds, channel: Channel) -> EventSeq {
    detect_events_in(&traj.times, traj.states.iter().map(|&u| channel.value(u)), th)
}

/// As [`detect_events`] on a bare time series.
pub fn detect_events_in<I: IntoIterator<Item = f64>>(times: &[f64], values: I, th: &Thresholds) -> EventSeq {
    let mut det = EventDetector::new(*th);
    for (&t, v) in times.iter().zip(values) {
        det.push(t, v);
    }
    det.finish()
}

/// Inter-spike counts N, one per gap between consecutive LAOs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NSamples {
    pub values: Vec<u64>,
    /// Number of zero entries, i.e. back-to-back outbreaks.
    pub zeros: usize,
}

impl NSamples {
    pub fn from_values(values: Vec<u64>) -> Self {
        let zeros = values.iter().filter(|&&n| n == 0).count();
        Self { values, zeros }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn extend(&mut self, other: &NSamples) {
        self.values.extend_from_slice(&other.values);
        self.zeros += other.zeros;
    }
}

/// Counts SAOs between consecutive LAOs; unresolved oscillations are skipped
/// and the stretches before the first and after the last LAO are dropped.
pub fn count_n(ev: &EventSeq) -> NSamples {
    let mut values = Vec::new();
    let mut current: Option<u64> = None;
    for e in &ev.events {
        match e.kind {
            EventKind::Lao => {
                if let Some(n) = current {
                    values.push(n);
                }
                current = Some(0);
            }
            EventKind::Sao => {
                if let Some(n) = current.as_mut() {
                    *n += 1;
                }
            }
            EventKind::Unresolved => {}
        }
    }
    NSamples::from_values(values)
}

/// Σ, the number of back-to-back outbreaks.
pub fn repeated_outbreak_count(ns: &NSamples) -> usize {
    ns.values.iter().filter(|&&n| n == 0).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ev(kinds: &[EventKind]) -> EventSeq {
        EventSeq {
            events: kinds
                .iter()
                .enumerate()
                .map(|(i, &kind)| Event {
                    kind,
                    t_start: i as f64,
                    t_end: i as f64 + 1.0,
                    t_peak: i as f64 + 0.5,
                    peak: 0.0,
                    amplitude: 0.0,
                })
                .collect(),
        }
    }

    use EventKind::{Lao as L, Sao as S, Unresolved as U};

    #[test]
    fn counts_between_spikes() {
        assert_eq!(count_n(&ev(&[L, S, S, S, L])).values, vec![3]);
        let ns = count_n(&ev(&[L, L, S, L]));
        assert_eq!(ns.values, vec![0, 1]);
        assert_eq!(ns.zeros, 1);
        assert_eq!(count_n(&ev(&[S, L, S, U, S, L, S])).values, vec![2]);
        assert!(count_n(&ev(&[S, L, S])).is_empty());
    }

    #[test]
    fn repeated_count() {
        assert_eq!(repeated_outbreak_count(&NSamples::from_values(vec![0, 0, 3, 0])), 3);
        assert_eq!(repeated_outbreak_count(&NSamples::default()), 0);
    }

    /// Bumps `(peak, trough)` joined by half-cosines, sampled finely.
    fn waveform(bumps: &[(f64, f64)], base: f64) -> (Vec<f64>, Vec<f64>) {
        let mut t = Vec::new();
        let mut v = Vec::new();
        let mut level = base;
        let mut clock = 0.0;
        for &(peak, trough) in bumps {
            for (from, to) in [(level, peak), (peak, trough)] {
                for i in 0..100 {
                    let s = i as f64 / 100.0;
                    t.push(clock);
                    v.push(from + (to - from) * 0.5 * (1.0 - (PI * s).cos()));
                    clock += 0.01;
                }
            }
            level = trough;
        }
        t.push(clock);
        v.push(level);
        (t, v)
    }

    #[test]
    fn synthetic_spikes_and_bumps() {
        let bumps = [(1.0, 0.4), (0.5, 0.4), (0.5, 0.4), (0.5, 0.4), (1.0, 0.0)];
        let (t, v) = waveform(&bumps, 0.0);
        let seq = detect_events_in(&t, v.iter().copied(), &Thresholds::prey());
        assert_eq!(seq.count(EventKind::Lao), 2, "{:?}", seq.kinds());
        assert_eq!(seq.count(EventKind::Sao), 3, "{:?}", seq.kinds());
        assert_eq!(count_n(&seq).values, vec![3]);
    }

    #[test]
    fn constant_signal_has_no_events() {
        let t: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let seq = detect_events_in(&t, std::iter::repeat_n(0.4, 1000), &Thresholds::prey());
        assert!(seq.events.is_empty());
    }

    #[test]
    fn sub_threshold_wiggles_dropped() {
        let t: Vec<f64> = (0..10_000).map(|i| i as f64 * 0.01).collect();
        let v = t.iter().map(|s| 0.4 + 0.02 * (5.0 * s).sin());
        assert!(detect_events_in(&t, v, &Thresholds::prey()).events.is_empty());
    }

    #[test]
    fn classification_corners() {
        let th = Thresholds::prey();
        assert_eq!(th.classify(0.9, 0.8), L);
        assert_eq!(th.classify(0.5, 0.1), S);
        assert_eq!(th.classify(0.7, 0.1), U);
        assert_eq!(th.classify(0.6, 0.5), S);
        assert_eq!(th.with_banded(true).classify(0.6, 0.5), U);
        assert_eq!(th.with_banded(true).classify(0.6, 0.2), S);
        assert!(Thresholds::new(1.0, 0.3, 0.2).is_err());
    }
}
