/* TSan happens-before annotations for libgomp synchronization points.
 *
 * libgomp's barriers and locks use futexes that ThreadSanitizer cannot see,
 * so every OpenMP program looks racy under gcc + TSan.  This shim interposes
 * the GOMP entry points and re-creates the missing happens-before edges with
 * TSan annotations: fork/join around GOMP_parallel, an all-threads edge at
 * barriers, and acquire/release pairing for critical/atomic sections.  True
 * races between concurrent iterations are untouched and still reported.
 */
#define _GNU_SOURCE
#include <dlfcn.h>
#include <stdlib.h>

extern void AnnotateHappensBefore(const char *f, int l, void *addr);
extern void AnnotateHappensAfter(const char *f, int l, void *addr);

#define HB(a) AnnotateHappensBefore(__FILE__, __LINE__, (a))
#define HA(a) AnnotateHappensAfter(__FILE__, __LINE__, (a))

typedef void (*gomp_fn)(void *);

static void (*orig_parallel)(gomp_fn, void *, unsigned, unsigned);
static void (*orig_barrier)(void);
static void (*orig_loop_end)(void);
static void (*orig_sections_end)(void);
static void (*orig_crit_start)(void);
static void (*orig_crit_end)(void);
static void (*orig_crit_name_start)(void **);
static void (*orig_crit_name_end)(void **);
static void (*orig_atomic_start)(void);
static void (*orig_atomic_end)(void);

static void *need(const char *name) {
    void *sym = dlsym(RTLD_NEXT, name);
    if (!sym) abort();
    return sym;
}

__attribute__((constructor)) static void init(void) {
    orig_parallel = need("GOMP_parallel");
    orig_barrier = need("GOMP_barrier");
    orig_loop_end = need("GOMP_loop_end");
    orig_sections_end = need("GOMP_sections_end");
    orig_crit_start = need("GOMP_critical_start");
    orig_crit_end = need("GOMP_critical_end");
    orig_crit_name_start = need("GOMP_critical_name_start");
    orig_crit_name_end = need("GOMP_critical_name_end");
    orig_atomic_start = need("GOMP_atomic_start");
    orig_atomic_end = need("GOMP_atomic_end");
}

struct wrap {
    gomp_fn fn;
    void *data;
    char enter_token;
    char exit_token;
};

static void trampoline(void *p) {
    struct wrap *w = (struct wrap *)p;
    HA(&w->enter_token);
    w->fn(w->data);
    HB(&w->exit_token);
}

void GOMP_parallel(gomp_fn fn, void *data, unsigned nthreads, unsigned flags) {
    struct wrap w = {fn, data, 0, 0};
    HB(&w.enter_token);
    orig_parallel(trampoline, &w, nthreads, flags);
    HA(&w.exit_token);
}

static char barrier_token;
static char critical_token;
static char atomic_token;

void GOMP_barrier(void) {
    HB(&barrier_token);
    orig_barrier();
    HA(&barrier_token);
}

void GOMP_loop_end(void) {
    HB(&barrier_token);
    orig_loop_end();
    HA(&barrier_token);
}

void GOMP_sections_end(void) {
    HB(&barrier_token);
    orig_sections_end();
    HA(&barrier_token);
}

void GOMP_critical_start(void) {
    orig_crit_start();
    HA(&critical_token);
}

void GOMP_critical_end(void) {
    HB(&critical_token);
    orig_crit_end();
}

void GOMP_critical_name_start(void **pptr) {
    orig_crit_name_start(pptr);
    HA(pptr);
}

void GOMP_critical_name_end(void **pptr) {
    HB(pptr);
    orig_crit_name_end(pptr);
}

void GOMP_atomic_start(void) {
    orig_atomic_start();
    HA(&atomic_token);
}

void GOMP_atomic_end(void) {
    HB(&atomic_token);
    orig_atomic_end();
}
