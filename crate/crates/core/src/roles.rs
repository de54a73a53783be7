//! Thread-role tags for the two server stacks.
//!
//! Network threads own sockets; file-system threads own container opens and
//! reads. In debug builds, container and static-file I/O asserts that it is
//! not running on a network thread.

use std::cell::Cell;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Unassigned,
    Network,
    FileSystem,
}

thread_local! {
    static ROLE: Cell<Role> = const { Cell::new(Role::Unassigned) };
}

pub fn set(role: Role) {
    ROLE.with(|r| r.set(role));
}

pub fn current() -> Role {
    ROLE.with(Cell::get)
}

#[track_caller]
pub fn assert_fs_allowed(op: &str) {
    debug_assert!(
        current() != Role::Network,
        "{op} invoked on a network thread"
    );
}

#[track_caller]
pub fn assert_net_allowed(op: &str) {
    debug_assert!(
        current() != Role::FileSystem,
        "{op} invoked on a file-system thread"
    );
}
