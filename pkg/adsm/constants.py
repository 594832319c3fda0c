# Copyright (C) 2025 John Schember <john@nachtimwald.com>
# SPDX-License-Identifier: GPL-3.0-or-later

ROOT_TOL = 1e-13      # |F(r_s)| bound for the soliton radius
DEFAULT_MARGIN = 1e-6  # Heights must stay above r_s + margin

DEFAULT_ORDER = 4
STENCIL_ORDERS = (2, 4, 6)
MIN_GRID = 8

FD_STEP = 1e-4  # Base step for the ambient finite difference oracles

# Closed form H against the trace of h, relative to max(1, |H|)
H_PATH_TOL = 1e-11
# sFN against F^(1/2) z
SPEED_FORM_TOL = 1e-12
# Q from the gap against Q from the volume integral, relative to max(1, |Q|, int |H s| dA)
Q_PATH_TOL = 1e-10
# Unit normal normalization
NORMAL_TOL = 1e-10
# Gap counted as zero, times P_x P_y
EQUALITY_TOL = 1e-12

MONO_TOL = 1e-8       # Flow monotonicity tolerance, times |Q|
SWEEP_DQ_TOL = 1e-7   # |dQ/deps| bound, times |Q|
SWEEP_D2Q_RTOL = 1e-2  # Second derivative against the closed form
SWEEP_EPS_FACTOR = 1e-2  # eps0 = factor * (r0 - r_s)
IBP_SIGN_TOL = 1e-14  # Allowed negative round-off in the IBP integrand

# Flow defaults
FLOW_SAFETY = 0.5
FLOW_DT_MIN = 1e-10
FLOW_SAMPLE_EVERY = 10
FLOW_MAX_STEPS = 1_000_000

# CLI exit codes
EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_BREAKDOWN = 2
EXIT_PROPERTY = 3
