//! Event-by-event evolution of the (channel, server) Markov chain.

use serde::Serialize;

use super::rng::{exponential_variate, Stream};
use crate::model::{Discipline, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Server {
    Idle,
    Holding { arrival_time: f64, arrived_on: bool },
}

/// One CTMC transition. Every arrival produces exactly one of `Arrival`
/// (admitted to an idle server), `Drop` or `Preempt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Arrival,
    Delivery,
    Drop,
    Preempt,
    ToggleOn,
    ToggleOff,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Arrival => "arrival",
            EventKind::Delivery => "delivery",
            EventKind::Drop => "drop",
            EventKind::Preempt => "preempt",
            EventKind::ToggleOn => "toggle_on",
            EventKind::ToggleOff => "toggle_off",
        }
    }
}

/// A completed service.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delivery {
    pub arrival_time: f64,
    pub arrived_on: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub time: f64,
    pub kind: EventKind,
    pub delivery: Option<Delivery>,
}

/// The bufferless On-Off queue, advanced one transition at a time.
///
/// Each step races fresh exponential clocks for every enabled transition:
/// the next arrival (rate `lambda`), the channel toggle (`kappa_on` while On,
/// `kappa_off` while Off) and, while On with an update held, the service
/// completion (`mu`). Redrawing all clocks is exact by memorylessness; in
/// particular the service clock simply does not run while Off.
///
/// Equal clock values resolve as toggle, then delivery, then arrival.
#[derive(Debug, Clone)]
pub struct Engine {
    params: SystemParams,
    discipline: Discipline,
    stream: Stream,
    clock: f64,
    channel: Channel,
    server: Server,
    /// Generation time of the freshest delivered update, `U(t)`.
    freshest: f64,
    events: u64,
}

impl Engine {
    /// Starts empty at time zero with the channel drawn from its stationary
    /// law and the age at zero.
    pub fn new(params: SystemParams, discipline: Discipline, mut stream: Stream) -> Self {
        let channel = if stream.uniform_open01() < params.stationary_on_fraction() {
            Channel::On
        } else {
            Channel::Off
        };
        Self {
            params,
            discipline,
            stream,
            clock: 0.0,
            channel,
            server: Server::Idle,
            freshest: 0.0,
            events: 0,
        }
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn server(&self) -> Server {
        self.server
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    /// `Delta(t) = t - U(t)` at the current clock.
    pub fn age(&self) -> f64 {
        self.clock - self.freshest
    }

    pub fn step(&mut self) -> Step {
        let p = &self.params;
        let arrival_in = exponential_variate(p.lambda(), &mut self.stream);
        let toggle_rate = match self.channel {
            Channel::On => p.kappa_on(),
            Channel::Off => p.kappa_off(),
        };
        let toggle_in = exponential_variate(toggle_rate, &mut self.stream);
        let service_in = match (self.channel, self.server) {
            (Channel::On, Server::Holding { .. }) => exponential_variate(p.mu(), &mut self.stream),
            _ => f64::INFINITY,
        };

        self.events += 1;
        if toggle_in <= service_in && toggle_in <= arrival_in {
            self.clock += toggle_in;
            let kind = match self.channel {
                Channel::On => {
                    self.channel = Channel::Off;
                    EventKind::ToggleOff
                }
                Channel::Off => {
                    self.channel = Channel::On;
                    EventKind::ToggleOn
                }
            };
            return self.emit(kind, None);
        }
        if service_in <= arrival_in {
            self.clock += service_in;
            let Server::Holding {
                arrival_time,
                arrived_on,
            } = self.server
            else {
                unreachable!("service clock only runs while holding");
            };
            self.server = Server::Idle;
            self.freshest = arrival_time;
            let delivery = Delivery {
                arrival_time,
                arrived_on,
            };
            return self.emit(EventKind::Delivery, Some(delivery));
        }

        self.clock += arrival_in;
        let incoming = Server::Holding {
            arrival_time: self.clock,
            arrived_on: self.channel == Channel::On,
        };
        let kind = match (self.server, self.channel, self.discipline) {
            (Server::Idle, _, _) => {
                self.server = incoming;
                EventKind::Arrival
            }
            (Server::Holding { .. }, Channel::Off, Discipline::Preemptive) => {
                self.server = incoming;
                EventKind::Preempt
            }
            (Server::Holding { .. }, _, _) => EventKind::Drop,
        };
        self.emit(kind, None)
    }

    #[inline]
    fn emit(&self, kind: EventKind, delivery: Option<Delivery>) -> Step {
        Step {
            time: self.clock,
            kind,
            delivery,
        }
    }
}
