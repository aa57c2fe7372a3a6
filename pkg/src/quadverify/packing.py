"""Flat parameter layout shared by the compiled and pure-Python rollout kernels.

Both kernels take the same (x0, n_steps, par, family, l1_enabled, n_adapt,
d_steps) arguments and fill the same (n_steps + 1, NCOL) log array, so parity
between them can be asserted directly.
"""

# parameter vector indices
P_M0 = 0
P_JX, P_JY, P_JZ = 1, 2, 3
P_G = 4
P_FMAX = 5
P_KP = 6          # 6..8
P_KV = 9          # 9..11
P_KR = 12         # 12..14
P_KOM = 15        # 15..17
P_REF = 18        # 18..21, family-specific (see below)
P_MASS_A = 22
P_MASS_OM = 23
P_MASS_PH = 24
P_TAU = 25
P_ASV = 26        # 26..28
P_ASOM = 29       # 29..31
P_WCF = 32
P_WCM = 33
P_TS = 34
P_SATF = 35
P_SATM = 36
P_DT = 37
NPAR = 38

# reference family codes; P_REF slots hold:
#   hover:   p0x, p0y, p0z
#   circle:  radius, period, altitude
#   figure8: a, b, period, altitude
REF_HOVER = 0
REF_CIRCLE = 1
REF_FIG8 = 2

# log row layout (one row per grid time)
C_T = 0
C_P = 1           # 1..3
C_V = 4           # 4..6
C_R = 7           # 7..15 row-major
C_OM = 16         # 16..18
C_M = 19
C_FCMD = 20
C_MCMD = 21       # 21..23
C_FAPP = 24
C_MAPP = 25       # 25..27
C_UL1 = 28        # 28..31
NCOL = 32

# the 19-D black-box state is columns 1..19 of a log row
STATE_SLICE = slice(1, 20)

# kernel return codes: 0 ok, k > 0 diverged at step k, k < 0 non-finite at -k
OK = 0
