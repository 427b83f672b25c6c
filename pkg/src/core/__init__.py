# Core library: graphs, numerics, matching, SBM fitting, the two-sample test and experiments
