//! Confidentiality-preserving message transport for 2D mesh
//! networks-on-chip, built from three pieces:
//!
//! * [`quasigroup`] / [`aont`] — an all-or-nothing transform over small
//!   modular quasigroups: every output block depends on every input block,
//!   so withholding any one block from an observer leaves all candidate
//!   messages equally consistent.
//! * [`routing`] — splits each message across two node-disjoint mesh
//!   routes chosen from randomly drawn pivot regions, so no single
//!   intermediate node sees both halves.
//! * [`sim`] — a deterministic flit-level wormhole simulator that measures
//!   what the protection costs in latency against baseline and
//!   cipher-latency reference modes.
//!
//! [`adversary`] quantifies what eavesdropping routers actually capture
//! under each defense, and [`codec`] fixes the on-the-wire part encoding
//! used by both the simulator and the command-line tools.

pub mod adversary;
pub mod aont;
pub mod codec;
pub mod quasigroup;
pub mod rng;
pub mod routing;
pub mod sim;
