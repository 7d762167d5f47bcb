# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled photon-history loop.

Mirrors ``randlase.transport.trace`` operation for operation (same random-draw
order, same floating-point expression order) so tallies match the pure-Python
backend bit for bit.  Parameter layout is produced by ``transport.pack_params``.
"""

from libc.math cimport log, exp, sqrt, cos, sin, acos, pow, erf, fabs, INFINITY, M_PI

ctypedef unsigned long long u64

cdef u64 GOLDEN = 0x9E3779B97F4A7C15ULL
cdef u64 STREAM_STRIDE = 0xD1B54A32D192ED03ULL
cdef double TWO_M53 = 1.1102230246251565e-16
cdef double WEIGHT_CAP = 1e300
cdef double EXP_LIMIT = 709.0

cdef enum:
    # fp layout
    F_BOUND = 0
    F_SIGMA_R = 1
    F_N0 = 2
    F_RHO = 3
    F_TRAP_SC = 4
    F_CHAN_SC = 5
    F_GPD = 6
    F_MU_MAJ = 7
    F_BETA = 8
    F_W_MIN = 9
    F_P_SURVIVE = 10
    F_CONE_COS = 11
    # ip layout
    I_GAUSSIAN = 0
    I_PHASE = 1
    I_SOURCE = 2
    I_MAX_ORDER = 3
    I_N_THETA = 4
    I_N_BUCKETS = 5


cdef struct Params:
    double bound, sigma_r, n0, rho, trap_sc, chan_sc, gpd, mu_maj, beta
    double w_min, p_survive, cone_cos
    int gaussian, phase, source, max_order, n_theta, n_buckets


cdef inline u64 mix64(u64 z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double uniform(u64* state) nogil:
    state[0] += GOLDEN
    return (<double>(mix64(state[0]) >> 11) + 0.5) * TWO_M53


cdef inline double density(const Params* P, double x, double y, double z) nogil:
    cdef double r2 = x * x + y * y + z * z
    if P.gaussian:
        if r2 > P.bound * P.bound:
            return 0.0
        return P.n0 * exp(-r2 / (2.0 * P.sigma_r * P.sigma_r))
    if r2 > P.bound * P.bound:
        return 0.0
    return P.n0


cdef inline double scattering_coeff(const Params* P, double x, double y, double z) nogil:
    cdef double dens = density(P, x, y, z)
    if dens == 0.0:
        return 0.0
    if x * x + y * y < P.rho * P.rho:
        return dens * P.chan_sc
    return dens * P.trap_sc


cdef inline double density_integral(const Params* P, double px, double py, double pz,
                                    double dx, double dy, double dz,
                                    double t1, double t2) nogil:
    cdef double s, b, r2, perp, scale
    if not P.gaussian:
        return P.n0 * (t2 - t1)
    s = P.sigma_r
    b = px * dx + py * dy + pz * dz
    r2 = px * px + py * py + pz * pz
    perp = exp(-(r2 - b * b) / (2.0 * s * s))
    scale = sqrt(2.0) * s
    return (P.n0 * perp * scale * 0.5 * sqrt(M_PI)
            * (erf((t2 + b) / scale) - erf((t1 + b) / scale)))


cdef inline double gain_integral(const Params* P, double px, double py, double pz,
                                 double dx, double dy, double dz, double length) nogil:
    cdef double c0, c1, s0, s1, a, b, c, disc, root, lo, hi
    if P.rho == 0.0:
        return 0.0
    # cylinder
    if P.rho == INFINITY:
        c0 = -INFINITY
        c1 = INFINITY
    else:
        a = dx * dx + dy * dy
        b = px * dx + py * dy
        c = px * px + py * py - P.rho * P.rho
        if a == 0.0:
            if c < 0.0:
                c0 = -INFINITY
                c1 = INFINITY
            else:
                return 0.0
        else:
            # b*b - a*c rewritten without cancellation far from the axis
            c = px * dy - py * dx
            disc = a * P.rho * P.rho - c * c
            if disc <= 0.0:
                return 0.0
            root = sqrt(disc)
            c0 = (-b - root) / a
            c1 = (-b + root) / a
    # sphere
    b = px * dx + py * dy + pz * dz
    c = px * px + py * py + pz * pz - P.bound * P.bound
    disc = b * b - c
    if disc <= 0.0:
        return 0.0
    root = sqrt(disc)
    s0 = -b - root
    s1 = -b + root
    lo = 0.0
    if c0 > lo:
        lo = c0
    if s0 > lo:
        lo = s0
    hi = length
    if c1 < hi:
        hi = c1
    if s1 < hi:
        hi = s1
    if hi > lo:
        return density_integral(P, px, py, pz, dx, dy, dz, lo, hi)
    return 0.0


cdef inline double dipole_cos(double u) nogil:
    cdef double t = 4.0 * u - 2.0
    cdef double a = pow(t + sqrt(t * t + 1.0), 1.0 / 3.0)
    cdef double mu = a - 1.0 / a
    if mu < -1.0:
        return -1.0
    if mu > 1.0:
        return 1.0
    return mu


cdef inline void rotate(double* d, double mu, double phi) nogil:
    cdef double dx = d[0], dy = d[1], dz = d[2]
    cdef double st, cp, sp, nx, ny, nz, tmp, norm
    st = 1.0 - mu * mu
    st = sqrt(st if st > 0.0 else 0.0)
    cp = cos(phi)
    sp = sin(phi)
    if fabs(dz) > 0.99999:
        nx = st * cp
        ny = st * sp
        nz = mu if dz > 0.0 else -mu
    else:
        tmp = sqrt(1.0 - dz * dz)
        nx = st * (dx * dz * cp - dy * sp) / tmp + dx * mu
        ny = st * (dy * dz * cp + dx * sp) / tmp + dy * mu
        nz = -st * cp * tmp + dz * mu
    norm = sqrt(nx * nx + ny * ny + nz * nz)
    d[0] = nx / norm
    d[1] = ny / norm
    d[2] = nz / norm


cdef inline void phase_sample(const Params* P, double* d, u64* st) nogil:
    cdef double mu, phi, s
    if P.phase == 0:
        mu = 2.0 * uniform(st) - 1.0
        phi = 2.0 * M_PI * uniform(st)
        s = 1.0 - mu * mu
        s = sqrt(s if s > 0.0 else 0.0)
        d[0] = s * cos(phi)
        d[1] = s * sin(phi)
        d[2] = mu
    else:
        mu = dipole_cos(uniform(st))
        phi = 2.0 * M_PI * uniform(st)
        rotate(d, mu, phi)


cdef inline void dipole_emission(double* d, u64* st) nogil:
    cdef double mu = dipole_cos(uniform(st))
    cdef double phi = 2.0 * M_PI * uniform(st)
    cdef double s = 1.0 - mu * mu
    s = sqrt(s if s > 0.0 else 0.0)
    d[0] = mu
    d[1] = s * cos(phi)
    d[2] = s * sin(phi)


cdef inline void emit(const Params* P, double* p, double* d, u64* st) nogil:
    cdef double R = P.bound, rho, z, r, phi, x, y, r2
    if P.source == 2:
        p[0] = 0.0
        p[1] = 0.0
        p[2] = -R
        d[0] = 0.0
        d[1] = 0.0
        d[2] = 1.0
        return
    if P.source == 0:
        p[0] = 0.0
        p[1] = 0.0
        p[2] = 0.0
        dipole_emission(d, st)
        return
    rho = P.rho if P.rho < R else R
    while True:
        z = (2.0 * uniform(st) - 1.0) * R
        r = rho * sqrt(uniform(st))
        phi = 2.0 * M_PI * uniform(st)
        x = r * cos(phi)
        y = r * sin(phi)
        r2 = x * x + y * y + z * z
        if r2 > R * R:
            continue
        if P.gaussian:
            if uniform(st) >= exp(-r2 / (2.0 * P.sigma_r * P.sigma_r)):
                continue
        break
    p[0] = x
    p[1] = y
    p[2] = z
    dipole_emission(d, st)


cdef inline int order_bucket(long order, int n_buckets) nogil:
    cdef int bits = 0
    while order > 0:
        bits += 1
        order >>= 1
    return bits if bits < n_buckets - 1 else n_buckets - 1


cdef inline void record_escape(const Params* P, int ch, long order, double w, const double* d,
                               double[:, ::1] escaped, long long[::1] counts,
                               double[:, ::1] cone, double[:, :, ::1] ang) nogil:
    cdef double dx = d[0], theta
    cdef int b
    escaped[ch, order] += w
    if ch == 0:
        counts[order] += 1
    if dx > 1.0:
        dx = 1.0
    if dx < -1.0:
        dx = -1.0
    theta = acos(dx)
    b = <int>(theta / M_PI * P.n_theta)
    if b >= P.n_theta:
        b = P.n_theta - 1
    ang[ch, b, order_bucket(order, P.n_buckets)] += w
    if d[2] >= P.cone_cos:
        cone[ch, order] += w


cdef void load_params(Params* P, const double[::1] fp, const long long[::1] ip):
    P[0].bound = fp[F_BOUND]
    P[0].sigma_r = fp[F_SIGMA_R]
    P[0].n0 = fp[F_N0]
    P[0].rho = fp[F_RHO]
    P[0].trap_sc = fp[F_TRAP_SC]
    P[0].chan_sc = fp[F_CHAN_SC]
    P[0].gpd = fp[F_GPD]
    P[0].mu_maj = fp[F_MU_MAJ]
    P[0].beta = fp[F_BETA]
    P[0].w_min = fp[F_W_MIN]
    P[0].p_survive = fp[F_P_SURVIVE]
    P[0].cone_cos = fp[F_CONE_COS]
    P[0].gaussian = <int>ip[I_GAUSSIAN]
    P[0].phase = <int>ip[I_PHASE]
    P[0].source = <int>ip[I_SOURCE]
    P[0].max_order = <int>ip[I_MAX_ORDER]
    P[0].n_theta = <int>ip[I_N_THETA]
    P[0].n_buckets = <int>ip[I_N_BUCKETS]


def channel_gain_integral(const double[::1] fp, const long long[::1] ip,
                          double px, double py, double pz,
                          double dx, double dy, double dz, double length):
    """Density integrated over the channel part of a flight; exposed for testing."""
    cdef Params P
    load_params(&P, fp, ip)
    return gain_integral(&P, px, py, pz, dx, dy, dz, length)


def trace_block(const double[::1] fp, const long long[::1] ip, u64 seed,
                long long start, long long count,
                double[:, ::1] escaped, long long[::1] counts,
                double[::1] coll, double[:, ::1] cone, double[:, :, ::1] ang,
                double[::1] scalars):
    """Trace photons ``start .. start+count-1`` into the given (zeroed) tally arrays.

    ``scalars`` receives [truncated_weight, diverged, truncated_count, 0].
    """
    cdef Params P
    load_params(&P, fp, ip)

    cdef double trunc_w = 0.0, trunc_n = 0.0
    cdef int diverged = 0
    cdef long long i
    cdef u64 st, seed_mix = mix64(seed)
    cdef double p[3]
    cdef double d[3]
    cdef double w, s, s_exit, b, c, disc, x, y, z, cc, expo, factor
    cdef long order
    cdef int collided, converted

    with nogil:
        for i in range(start, start + count):
            st = mix64(seed_mix ^ (<u64>i * STREAM_STRIDE))
            emit(&P, p, d, &st)
            w = 1.0
            order = 0
            while True:
                # free flight
                b = p[0] * d[0] + p[1] * d[1] + p[2] * d[2]
                c = p[0] * p[0] + p[1] * p[1] + p[2] * p[2] - P.bound * P.bound
                disc = b * b - c
                if disc <= 0.0:
                    s_exit = 0.0
                else:
                    s_exit = -b + sqrt(disc)
                    if s_exit < 0.0:
                        s_exit = 0.0
                s = 0.0
                collided = 0
                if P.mu_maj > 0.0:
                    while True:
                        s += -log(uniform(&st)) / P.mu_maj
                        if s >= s_exit:
                            break
                        x = p[0] + s * d[0]
                        y = p[1] + s * d[1]
                        z = p[2] + s * d[2]
                        cc = scattering_coeff(&P, x, y, z)
                        if cc >= P.mu_maj or (cc > 0.0 and uniform(&st) * P.mu_maj < cc):
                            collided = 1
                            break
                if not collided:
                    s = s_exit
                # gain along the flight
                if P.gpd > 0.0:
                    expo = P.gpd * gain_integral(&P, p[0], p[1], p[2], d[0], d[1], d[2], s)
                    if expo < EXP_LIMIT:
                        factor = exp(expo)
                    else:
                        factor = INFINITY
                    w = w * factor
                    if w > WEIGHT_CAP:
                        w = WEIGHT_CAP
                        diverged = 1
                if not collided:
                    record_escape(&P, 0, order, w, d, escaped, counts, cone, ang)
                    break
                p[0] = x
                p[1] = y
                p[2] = z
                coll[order] += w
                # collision
                converted = 0
                if P.beta > 0.0 and (P.beta >= 1.0 or uniform(&st) < P.beta):
                    converted = 1
                phase_sample(&P, d, &st)
                if converted:
                    record_escape(&P, 1, order, w, d, escaped, counts, cone, ang)
                    break
                order += 1
                if order > P.max_order:
                    trunc_w += w
                    trunc_n += 1.0
                    break
                if w < P.w_min:
                    if uniform(&st) < P.p_survive:
                        w = w / P.p_survive
                    else:
                        break

    scalars[0] = trunc_w
    scalars[1] = diverged
    scalars[2] = trunc_n
