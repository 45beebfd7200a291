//! Scripts shared by unit tests.

pub const AFFINITY_APP: &str = "\
- f_tag:
  - workers:
      - local_w1
      - local_w2
    strategy: best_first
    invalidate:
      - capacity_used 80%
    affinity: g_tag,!h_tag
  - workers:
      - public_w1
  followup: fail
";

pub const EXAMPLE_APP: &str = "\
- f_tag:
  - workers:
      - w1
      - w2
    strategy: best_first
    invalidate:
      - capacity_used 80%
  followup: fail
";

pub const EXAMPLE_CONFIG: &str = "\
workers:
  - name: w1
    max_memory: 10
  - name: w2
    max_memory: 20
functions:
  - name: f
    memory: 8
    tag: f_tag
";
