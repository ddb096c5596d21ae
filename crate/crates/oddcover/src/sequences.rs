//! Integer sequence generators and residue analysis.

// Placeholder; filled in after the constructions module.
