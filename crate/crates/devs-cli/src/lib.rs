//! HTTP front end for the simulation core: a node daemon exposing the
//! simulator and package services, and a client driving the upload, compile,
//! assign, simulate, fetch-logs workflow against a set of nodes.

pub mod client;
pub mod node;
pub mod wire;
