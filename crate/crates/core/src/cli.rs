//! Command-line entry point. Placeholder until subcommands land.

use std::ffi::OsString;

pub fn run<I, T>(_args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    eprintln!("not yet implemented");
    3
}
