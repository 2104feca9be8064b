//! Membrane constants, lumped segment parameters and the four-phase
//! channel state machine.
//!
//! A segment fires a constant sodium surge once its voltage crosses the
//! trigger threshold upward. Potassium switches on at the same instant and
//! keeps flowing after sodium cuts out at the peak threshold, until the
//! voltage reaches the trough threshold. The segment then recovers passively
//! and re-arms once it is back within `rearm_margin` of rest.

use std::f64::consts::PI;
use std::fmt;

use crate::error::ParamError;

/// Area-normalized membrane properties and the threshold voltages.
///
/// Densities are per cm², resistivity in Ω·cm, voltages in volts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembraneConstants {
    /// F/cm²
    pub c_mem: f64,
    /// S/cm²
    pub g_leak: f64,
    /// Ω·cm
    pub rho_axial: f64,
    /// A/cm²
    pub j_na: f64,
    /// A/cm²
    pub j_k: f64,
    pub v_rest: f64,
    pub v_trig: f64,
    pub v_max: f64,
    pub v_min: f64,
    /// A recovering segment re-arms at `v_rest - rearm_margin`.
    pub rearm_margin: f64,
}

impl Default for MembraneConstants {
    fn default() -> Self {
        Self {
            c_mem: 1e-6,
            g_leak: 0.3e-3,
            rho_axial: 15.7,
            j_na: 269e-6,
            j_k: 60.8e-6,
            v_rest: -70e-3,
            v_trig: -54e-3,
            v_max: 48e-3,
            v_min: -96e-3,
            rearm_margin: 2e-3,
        }
    }
}

impl MembraneConstants {
    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("c_mem", self.c_mem),
            ("g_leak", self.g_leak),
            ("rho_axial", self.rho_axial),
            ("j_na", self.j_na),
            ("j_k", self.j_k),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ParamError::new(name, format!("must be positive, got {v}")));
            }
        }
        let volts = [
            ("v_rest", self.v_rest),
            ("v_trig", self.v_trig),
            ("v_max", self.v_max),
            ("v_min", self.v_min),
            ("rearm_margin", self.rearm_margin),
        ];
        for (name, v) in volts {
            if !v.is_finite() {
                return Err(ParamError::new(name, "must be finite"));
            }
        }
        if self.v_min >= self.v_rest {
            return Err(ParamError::new("v_min", "violates v_min < v_rest"));
        }
        if self.v_rest >= self.v_trig {
            return Err(ParamError::new("v_trig", "violates v_rest < v_trig"));
        }
        if self.v_trig >= self.v_max {
            return Err(ParamError::new("v_max", "violates v_trig < v_max"));
        }
        if self.j_na <= self.j_k {
            return Err(ParamError::new("j_na", "violates j_na > j_k"));
        }
        if self.rearm_margin < 0.0 || self.v_rest - self.rearm_margin <= self.v_min {
            return Err(ParamError::new(
                "rearm_margin",
                "must satisfy 0 <= rearm_margin < v_rest - v_min",
            ));
        }
        Ok(())
    }

    /// Voltage at which a recovering segment becomes excitable again.
    pub fn rearm_level(&self) -> f64 {
        self.v_rest - self.rearm_margin
    }
}

/// Cylinder dimensions in centimetres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentGeometry {
    pub length: f64,
    pub diameter: f64,
}

impl Default for SegmentGeometry {
    /// 500 µm long, 1 µm across.
    fn default() -> Self {
        Self {
            length: 500e-4,
            diameter: 1e-4,
        }
    }
}

impl SegmentGeometry {
    pub fn new(length: f64, diameter: f64) -> Result<Self, ParamError> {
        let g = Self { length, diameter };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(ParamError::new("length", "must be positive"));
        }
        if !(self.diameter.is_finite() && self.diameter > 0.0) {
            return Err(ParamError::new("diameter", "must be positive"));
        }
        Ok(())
    }

    /// Lateral membrane area in cm².
    pub fn lateral_area(&self) -> f64 {
        PI * self.diameter * self.length
    }

    /// Axial cross-section in cm².
    pub fn cross_section(&self) -> f64 {
        PI * self.diameter * self.diameter / 4.0
    }
}

/// Lumped circuit values for one segment, in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentElectrical {
    pub cap: f64,
    pub r_leak: f64,
    pub r_series: f64,
    pub i_na: f64,
    pub i_k: f64,
    pub na_enabled: bool,
    pub k_enabled: bool,
}

impl SegmentElectrical {
    pub fn new(cap: f64, r_leak: f64, r_series: f64, i_na: f64, i_k: f64) -> Result<Self, ParamError> {
        let e = Self {
            cap,
            r_leak,
            r_series,
            i_na,
            i_k,
            na_enabled: true,
            k_enabled: true,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, v) in [("cap", self.cap), ("r_leak", self.r_leak), ("r_series", self.r_series)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ParamError::new(name, format!("must be positive, got {v}")));
            }
        }
        for (name, v) in [("i_na", self.i_na), ("i_k", self.i_k)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ParamError::new(name, format!("must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Same segment with both channel sources removed (passive membrane).
    pub fn passive(mut self) -> Self {
        self.na_enabled = false;
        self.k_enabled = false;
        self
    }

    pub fn with_series_resistance(mut self, r_series: f64) -> Self {
        self.r_series = r_series;
        self
    }

    /// Membrane time constant `r_leak * cap`.
    pub fn tau(&self) -> f64 {
        self.r_leak * self.cap
    }
}

/// Lumps a cylindrical segment into capacitance, leak and axial resistance,
/// and channel currents.
pub fn derive_electrical(
    geom: &SegmentGeometry,
    mc: &MembraneConstants,
) -> Result<SegmentElectrical, ParamError> {
    geom.validate()?;
    mc.validate()?;
    let area = geom.lateral_area();
    SegmentElectrical::new(
        mc.c_mem * area,
        1.0 / (mc.g_leak * area),
        mc.rho_axial * geom.length / geom.cross_section(),
        mc.j_na * area,
        mc.j_k * area,
    )
}

/// Excitation phase of one segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum ChannelState {
    #[default]
    Resting,
    Depolarizing,
    Repolarizing,
    Recovering,
}

impl ChannelState {
    /// The only phase this one may move to.
    pub fn successor(self) -> Self {
        match self {
            ChannelState::Resting => ChannelState::Depolarizing,
            ChannelState::Depolarizing => ChannelState::Repolarizing,
            ChannelState::Repolarizing => ChannelState::Recovering,
            ChannelState::Recovering => ChannelState::Resting,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChannelState::Resting => "resting",
            ChannelState::Depolarizing => "depolarizing",
            ChannelState::Repolarizing => "repolarizing",
            ChannelState::Recovering => "recovering",
        }
    }
}

impl fmt::Display for ChannelState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Advances the phase given the voltage before and after one integration
/// step. At most one transition happens per call.
pub fn step_channel_state(
    s: ChannelState,
    v_prev: f64,
    v_now: f64,
    seg: &SegmentElectrical,
    mc: &MembraneConstants,
) -> ChannelState {
    let fire = match s {
        ChannelState::Resting => seg.na_enabled && v_prev < mc.v_trig && mc.v_trig <= v_now,
        ChannelState::Depolarizing => v_now >= mc.v_max,
        ChannelState::Repolarizing => v_now <= mc.v_min,
        ChannelState::Recovering => v_now >= mc.rearm_level(),
    };
    if fire {
        s.successor()
    } else {
        s
    }
}

/// Net channel current for a phase; positive raises the membrane voltage.
pub fn source_current(s: ChannelState, seg: &SegmentElectrical) -> f64 {
    let na = if seg.na_enabled { seg.i_na } else { 0.0 };
    let k = if seg.k_enabled { seg.i_k } else { 0.0 };
    match s {
        ChannelState::Depolarizing => na - k,
        ChannelState::Repolarizing => -k,
        ChannelState::Resting | ChannelState::Recovering => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MV: f64 = 1e-3;

    fn table1() -> SegmentElectrical {
        SegmentElectrical::new(15.7e-12, 212e6, 99.9e6, 4.22e-9, 0.955e-9).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn default_constants_reproduce_table_values() {
        let e = derive_electrical(&SegmentGeometry::default(), &MembraneConstants::default()).unwrap();
        assert!(rel(e.cap, 15.7e-12) < 5e-3, "{}", e.cap);
        assert!(rel(e.r_leak, 212e6) < 5e-3, "{}", e.r_leak);
        assert!(rel(e.r_series, 99.9e6) < 5e-3, "{}", e.r_series);
        assert!(rel(e.i_na, 4.22e-9) < 5e-3, "{}", e.i_na);
        assert!(rel(e.i_k, 0.955e-9) < 5e-3, "{}", e.i_k);
        assert!(e.na_enabled && e.k_enabled);
    }

    #[test]
    fn doubled_length_scales_linearly() {
        let mc = MembraneConstants::default();
        let base = derive_electrical(&SegmentGeometry::default(), &mc).unwrap();
        let long = derive_electrical(&SegmentGeometry::new(1000e-4, 1e-4).unwrap(), &mc).unwrap();
        assert!(rel(long.cap, 31.4e-12) < 5e-3);
        assert!(rel(long.r_leak, 106e6) < 5e-3);
        assert!(rel(long.r_series, 199.8e6) < 5e-3);
        assert!(rel(long.cap, 2.0 * base.cap) < 1e-12);
    }

    #[test]
    fn doubled_diameter_quarters_axial_resistance() {
        // Hand-evaluated: A = π·2e-4·0.05 = 3.1416e-5 cm² → C = 31.416 pF;
        // cross-section = π·(2e-4)²/4 = 3.1416e-8 cm² → R = 15.7·0.05/3.1416e-8 = 24.99 MΩ.
        let e = derive_electrical(
            &SegmentGeometry::new(500e-4, 2e-4).unwrap(),
            &MembraneConstants::default(),
        )
        .unwrap();
        assert!(rel(e.cap, 31.416e-12) < 1e-4, "{}", e.cap);
        assert!(rel(e.r_series, 24.987e6) < 1e-4, "{}", e.r_series);
    }

    #[test]
    fn invalid_constants_are_rejected() {
        let mut mc = MembraneConstants::default();
        mc.v_trig = -100e-3;
        assert_eq!(mc.validate().unwrap_err().field, "v_trig");
        let mut mc = MembraneConstants::default();
        mc.j_k = mc.j_na * 2.0;
        assert_eq!(mc.validate().unwrap_err().field, "j_na");
        let mut mc = MembraneConstants::default();
        mc.g_leak = 0.0;
        assert_eq!(mc.validate().unwrap_err().field, "g_leak");
        assert!(SegmentGeometry::new(0.0, 1e-4).is_err());
        assert!(SegmentElectrical::new(1e-12, 1e6, -1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn threshold_examples() {
        let mc = MembraneConstants::default();
        let seg = table1();
        use ChannelState::*;
        assert_eq!(step_channel_state(Resting, -55.0 * MV, -53.0 * MV, &seg, &mc), Depolarizing);
        assert_eq!(step_channel_state(Depolarizing, 40.0 * MV, 49.0 * MV, &seg, &mc), Repolarizing);
        assert_eq!(step_channel_state(Repolarizing, -95.0 * MV, -97.0 * MV, &seg, &mc), Recovering);
        assert_eq!(step_channel_state(Resting, -70.0 * MV, -70.0 * MV, &seg, &mc), Resting);
        assert_eq!(step_channel_state(Recovering, -73.0 * MV, -72.0 * MV, &seg, &mc), Resting);
        assert_eq!(step_channel_state(Recovering, -74.0 * MV, -73.0 * MV, &seg, &mc), Recovering);
        // downward transit of the trigger level does not fire
        assert_eq!(step_channel_state(Resting, -53.0 * MV, -55.0 * MV, &seg, &mc), Resting);
        // disabled sodium never leaves rest
        assert_eq!(step_channel_state(Resting, -55.0 * MV, 0.0, &seg.passive(), &mc), Resting);
    }

    #[test]
    fn source_current_examples() {
        let seg = table1();
        let dep = source_current(ChannelState::Depolarizing, &seg);
        assert!((dep - 3.265e-9).abs() < 1e-15);
        assert_eq!(source_current(ChannelState::Repolarizing, &seg), -0.955e-9);
        assert_eq!(source_current(ChannelState::Resting, &seg), 0.0);
        assert_eq!(source_current(ChannelState::Recovering, &seg), 0.0);
        for s in [
            ChannelState::Resting,
            ChannelState::Depolarizing,
            ChannelState::Repolarizing,
            ChannelState::Recovering,
        ] {
            assert_eq!(source_current(s, &seg.passive()), 0.0);
        }
    }

    #[test]
    fn isolated_segment_always_completes_each_stroke() {
        let mc = MembraneConstants::default();
        let seg = table1();
        let leak = |v: f64| (mc.v_rest - v) / seg.r_leak;
        // worst case for the upstroke is at the peak threshold
        let up = source_current(ChannelState::Depolarizing, &seg) + leak(mc.v_max);
        assert!((leak(mc.v_max) + 0.557e-9).abs() < 1e-12);
        assert!(up > 0.0);
        // worst case for the downstroke is at the trough threshold
        let down = source_current(ChannelState::Repolarizing, &seg) + leak(mc.v_min);
        assert!((leak(mc.v_min) - 0.123e-9).abs() < 1e-12);
        assert!(down < 0.0);
    }

    proptest! {
        #[test]
        fn phases_only_advance_along_the_cycle(
            volts in proptest::collection::vec(-0.12f64..0.08, 2..400),
            na in any::<bool>(),
        ) {
            let mc = MembraneConstants::default();
            let mut seg = table1();
            seg.na_enabled = na;
            let mut s = ChannelState::Resting;
            for w in volts.windows(2) {
                let next = step_channel_state(s, w[0], w[1], &seg, &mc);
                prop_assert!(next == s || next == s.successor());
                if !na {
                    prop_assert_eq!(next, ChannelState::Resting);
                }
                s = next;
            }
        }

        #[test]
        fn derivation_is_homogeneous_in_length(k in 0.1f64..10.0) {
            let mc = MembraneConstants::default();
            let g = SegmentGeometry::default();
            let a = derive_electrical(&g, &mc).unwrap();
            let b = derive_electrical(&SegmentGeometry::new(g.length * k, g.diameter).unwrap(), &mc).unwrap();
            prop_assert!(rel(b.cap, a.cap * k) < 1e-12);
            prop_assert!(rel(b.i_na, a.i_na * k) < 1e-12);
            prop_assert!(rel(b.r_leak, a.r_leak / k) < 1e-12);
            prop_assert!(rel(b.r_series, a.r_series * k) < 1e-12);
        }
    }
}
