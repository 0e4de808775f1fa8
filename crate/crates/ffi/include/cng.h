#ifndef CNG_H
#define CNG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CngObjective {
  CNG_OBJECTIVE_DEFENDER = 0,
  CNG_OBJECTIVE_ATTACKER = 1,
  CNG_OBJECTIVE_SOCIAL = 2,
} CngObjective;

typedef enum CngCutRule {
  // Defender's cut if it deviates, otherwise the attacker's.
  CNG_CUT_RULE_FIRST = 0,
  // One cut per deviating player.
  CNG_CUT_RULE_ALL = 1,
} CngCutRule;

// Status codes returned by every fallible function.
typedef enum CngCode {
  CNG_CODE_OK = 0,
  CNG_CODE_NULL_POINTER = 1,
  CNG_CODE_INVALID_UTF8 = 2,
  CNG_CODE_JSON = 3,
  CNG_CODE_INVALID_INSTANCE = 4,
  CNG_CODE_INVALID_ARGUMENT = 5,
  CNG_CODE_SIZE_LIMIT = 6,
  // The price ratio is undefined; outputs are still written, the ratio as +inf.
  CNG_CODE_DIVISION_BY_ZERO = 7,
  CNG_CODE_IO = 8,
  CNG_CODE_PANIC = 9,
} CngCode;

typedef enum CngSolveStatus {
  CNG_SOLVE_STATUS_PROVED_OPTIMAL_NE = 0,
  CNG_SOLVE_STATUS_INCUMBENT_ON_LIMIT = 2,
} CngSolveStatus;

// A validated game instance.
typedef struct CngInstance CngInstance;

// The outcome of one equilibrium solve.
typedef struct CngResult CngResult;

typedef struct CngSolveOptions {
  enum CngObjective objective;
  // Seconds; must be positive.
  double time_limit_s;
  double phi_increment;
  enum CngCutRule cut_rule;
} CngSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *cng_last_error(void);

// Defaults: defender objective, 100 s, slack increment 1.
struct CngSolveOptions cng_solve_options_default(void);

// Parses and validates an instance from a nul-terminated JSON string.
//
// # Safety
// `json` must be a valid C string and `out` a valid pointer.
enum CngCode cng_instance_from_json(const char *json, struct CngInstance **out);

// Canonical JSON of an instance.
//
// # Safety
// `inst` must come from this library; `out` must be a valid pointer.
enum CngCode cng_instance_to_json(const struct CngInstance *inst, char **out);

// Number of nodes, or 0 for a null handle.
//
// # Safety
// `inst` must be null or come from this library.
size_t cng_instance_n(const struct CngInstance *inst);

// # Safety
// `inst` must be null or come from this library, and is invalid afterwards.
void cng_instance_free(struct CngInstance *inst);

// Both payoffs of a profile given as 0/1 byte arrays of length `len`.
//
// # Safety
// `x` and `alpha` must point to `len` bytes; outputs must be valid pointers.
enum CngCode cng_payoffs(const struct CngInstance *inst,
                         const uint8_t *x,
                         const uint8_t *alpha,
                         size_t len,
                         double *defender,
                         double *attacker);

// Computes the objective-best equilibrium.
//
// # Safety
// `inst` must come from this library; `opts` may be null for defaults.
enum CngCode cng_solve(const struct CngInstance *inst,
                       const struct CngSolveOptions *opts,
                       struct CngResult **out);

// Price of Security. `out` may be null when the equilibrium is not needed;
// `opts->objective` is ignored.
//
// # Safety
// Pointers must be valid or null where allowed.
enum CngCode cng_price_of_security(const struct CngInstance *inst,
                                   const struct CngSolveOptions *opts,
                                   double *ratio,
                                   struct CngResult **out);

// Price of Aggression; see [`cng_price_of_security`].
//
// # Safety
// Pointers must be valid or null where allowed.
enum CngCode cng_price_of_aggression(const struct CngInstance *inst,
                                     const struct CngSolveOptions *opts,
                                     double *ratio,
                                     struct CngResult **out);

// # Safety
// `r` must be null or come from this library, and is invalid afterwards.
void cng_result_free(struct CngResult *r);

// # Safety
// `r` must come from this library.
enum CngSolveStatus cng_result_status(const struct CngResult *r);

// Certified regret of the returned profile.
//
// # Safety
// `r` must come from this library.
double cng_result_phi(const struct CngResult *r);

// # Safety
// `r` must come from this library.
double cng_result_objective_value(const struct CngResult *r);

// # Safety
// `r` must come from this library.
double cng_result_defender_payoff(const struct CngResult *r);

// # Safety
// `r` must come from this library.
double cng_result_attacker_payoff(const struct CngResult *r);

// # Safety
// `r` must come from this library.
size_t cng_result_iterations(const struct CngResult *r);

// Number of nodes of the profile.
//
// # Safety
// `r` must come from this library.
size_t cng_result_n(const struct CngResult *r);

// Copies the profile into two 0/1 byte arrays of length `len`.
//
// # Safety
// `x` and `alpha` must point to `len` writable bytes.
enum CngCode cng_result_profile(const struct CngResult *r, uint8_t *x, uint8_t *alpha, size_t len);

// The result in the `cng solve` JSON format.
//
// # Safety
// `r` must come from this library; `out` must be a valid pointer.
enum CngCode cng_result_to_json(const struct CngResult *r, char **out);

// # Safety
// `s` must be null or a string returned by this library.
void cng_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CNG_H */
