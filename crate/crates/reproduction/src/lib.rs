//! Holds the `acceptance` test target, which reruns the published proofs
//! and the property suites and prints one verdict per criterion.
