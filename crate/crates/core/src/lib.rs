//! Privacy-preserving ridesharing: a trip-organizing server matches
//! drivers' offers to riders' requests over kNN-encrypted trip indices,
//! either one driver end to end (NRS) or across transfers between drivers
//! (TRS).

pub mod bloom;
pub mod knn;
pub mod nrs;
pub mod par;
pub mod sim;
pub mod tos;
pub mod trs;
