//! The I/O channel bus.
//!
//! 512 fifteen-bit latches addressed by 9-bit channel ids, separate from the
//! erasable address space. A device can be attached to any channel; it then
//! sees every READ (and RAND) and every WRITE on that channel and decides what
//! the CPU reads and what the latch keeps.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::manifest::Manifest;
use crate::word::DATA_MASK;

pub const CHANNEL_COUNT: usize = 512;

/// DSALMOUT bit driving engine power.
pub const ENGINE_ON_BIT: u16 = 0o20000;

/// SUPERBNK bit selecting the upper fixed banks.
pub const SUPERBANK_BIT: u16 = 0o00100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChannelError {
    #[error("channel {0:o} out of range")]
    BadChannel(u16),
    #[error("channel {0:o} already has a device attached")]
    AlreadyAttached(u16),
}

/// A device hooked onto one channel.
pub trait ChannelDevice: Send {
    /// Value the CPU sees when reading; `latch` is the current latch content.
    fn read(&mut self, latch: u16) -> u16 {
        latch
    }

    /// Called once per WRITE; returns the value the latch keeps.
    fn write(&mut self, value: u16) -> u16 {
        value
    }
}

pub struct ChannelBus {
    latches: Box<[u16; CHANNEL_COUNT]>,
    hooks: BTreeMap<u16, Box<dyn ChannelDevice>>,
    dsalmout: u16,
}

impl fmt::Debug for ChannelBus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChannelBus")
            .field("hooked", &self.hooks.keys().collect::<Vec<_>>())
            .field("dsalmout", &self.dsalmout)
            .finish()
    }
}

impl Default for ChannelBus {
    fn default() -> Self {
        ChannelBus::new(&Manifest::default())
    }
}

fn check(ch: u16) -> Result<usize, ChannelError> {
    if (ch as usize) < CHANNEL_COUNT {
        Ok(ch as usize)
    } else {
        Err(ChannelError::BadChannel(ch))
    }
}

impl ChannelBus {
    pub fn new(manifest: &Manifest) -> ChannelBus {
        ChannelBus {
            latches: Box::new([0; CHANNEL_COUNT]),
            hooks: BTreeMap::new(),
            dsalmout: manifest.dsalmout(),
        }
    }

    pub fn read(&mut self, ch: u16) -> Result<u16, ChannelError> {
        let i = check(ch)?;
        let latch = self.latches[i];
        Ok(match self.hooks.get_mut(&ch) {
            Some(hook) => hook.read(latch) & DATA_MASK,
            None => latch,
        })
    }

    pub fn write(&mut self, ch: u16, value: u16) -> Result<(), ChannelError> {
        let i = check(ch)?;
        let value = value & DATA_MASK;
        self.latches[i] = match self.hooks.get_mut(&ch) {
            Some(hook) => hook.write(value) & DATA_MASK,
            None => value,
        };
        Ok(())
    }

    /// Latch content, bypassing any device.
    pub fn peek(&self, ch: u16) -> Result<u16, ChannelError> {
        Ok(self.latches[check(ch)?])
    }

    /// Sets a latch directly, bypassing any device.
    pub fn set_latch(&mut self, ch: u16, value: u16) -> Result<(), ChannelError> {
        self.latches[check(ch)?] = value & DATA_MASK;
        Ok(())
    }

    pub fn attach_device(
        &mut self,
        ch: u16,
        device: Box<dyn ChannelDevice>,
    ) -> Result<(), ChannelError> {
        check(ch)?;
        if self.hooks.contains_key(&ch) {
            return Err(ChannelError::AlreadyAttached(ch));
        }
        self.hooks.insert(ch, device);
        Ok(())
    }

    pub fn is_attached(&self, ch: u16) -> bool {
        self.hooks.contains_key(&ch)
    }

    /// Clears every latch and detaches every device.
    pub fn reset(&mut self) {
        self.latches.fill(0);
        self.hooks.clear();
    }

    pub fn engine_on(&self) -> bool {
        self.latches[self.dsalmout as usize] & ENGINE_ON_BIT != 0
    }

    pub fn dsalmout_channel(&self) -> u16 {
        self.dsalmout
    }

    pub fn latches(&self) -> &[u16; CHANNEL_COUNT] {
        &self.latches
    }
}

/// A sensor stub fed from a script: each read takes the next scripted value,
/// holding the last one once the script runs dry.
#[derive(Debug, Default)]
pub struct ScriptedSensor {
    script: Arc<Mutex<VecDeque<u16>>>,
    current: u16,
}

/// Handle used to feed values to an attached [`ScriptedSensor`].
#[derive(Debug, Clone)]
pub struct SensorHandle(Arc<Mutex<VecDeque<u16>>>);

impl SensorHandle {
    pub fn push(&self, value: u16) {
        self.0
            .lock()
            .expect("sensor script lock")
            .push_back(value & DATA_MASK);
    }
}

impl ScriptedSensor {
    pub fn new() -> (ScriptedSensor, SensorHandle) {
        let sensor = ScriptedSensor::default();
        let handle = SensorHandle(sensor.script.clone());
        (sensor, handle)
    }
}

impl ChannelDevice for ScriptedSensor {
    fn read(&mut self, _latch: u16) -> u16 {
        if let Some(v) = self.script.lock().expect("sensor script lock").pop_front() {
            self.current = v;
        }
        self.current
    }
}
