/* C interface to the UMEML toolkit: dataset generation, cross-validated
 * training of the fusion model and its ablations, self-check suites, and
 * curve extraction. All entry points are thread-safe as long as each
 * umeml_config is used by one thread at a time.
 *
 * Configuration is a string key/value store; keys are validated when set
 * and values are parsed immediately. Each operation reads the keys it
 * understands and falls back to documented defaults for the rest. Paths
 * are UTF-8. Result strings are heap-allocated, NUL-terminated, and must
 * be released with umeml_string_free.
 */
#ifndef UMEML_H
#define UMEML_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum umeml_status {
    UMEML_OK = 0,
    UMEML_ERR_INVALID_ARGUMENT = 1, /* bad key, unparsable value, bad setup */
    UMEML_ERR_DIMENSION = 2,        /* tensor shape mismatch */
    UMEML_ERR_IO = 3,               /* filesystem failure */
    UMEML_ERR_FORMAT = 4,           /* malformed on-disk data */
    UMEML_ERR_RUNTIME = 5,          /* non-finite loss, degenerate input, ... */
    UMEML_ERR_CHECK_FAILED = 6      /* a verification suite found failures */
} umeml_status;

/* Opaque run configuration. */
typedef struct umeml_config umeml_config;

umeml_config* umeml_config_new(void);
void umeml_config_free(umeml_config* cfg);

/* Sets one key. Unknown keys and unparsable values are rejected with
 * UMEML_ERR_INVALID_ARGUMENT. Setting a key twice keeps the last value.
 *
 * Dataset generation:  out, samples, classes, width, gene_width, m_min,
 *                      m_max, groups, signal_p, signal_g, noise,
 *                      censor_rate, base_hazard, hazard_ratio, seed
 * Training:            data, task (grading|classification|survival),
 *                      variant (full|no_modularity|no_registers|bifusion|
 *                      concat|add|path_only|gene_only), alpha, beta, gamma,
 *                      prototypes, registers, gene_groups, width,
 *                      gene_width, heads, cross_layers, path_self_layers,
 *                      gene_self_layers, decoder_layers, survival_bins,
 *                      lr, epochs, folds, weight_decay, uncensored_weight,
 *                      seed_base, split_seed, parallel_folds, out
 * Checks:              seeds, inject (gradient suite); seed (oracles)
 * Curves:              results, out
 *
 * Unset training keys default to the task policy (lr 1e-3 and 10 epochs
 * for grading/classification, lr 2e-4 and 5 epochs for survival; 5 folds)
 * and to the dataset's own shapes for width, gene_width, and gene_groups. */
umeml_status umeml_config_set(umeml_config* cfg, const char* key, const char* value);

/* Releases a string returned through a char** out-parameter. */
void umeml_string_free(char* s);

/* Writes a synthetic dataset (feature files plus manifest) under "out".
 * Deterministic in "seed". */
umeml_status umeml_generate(const umeml_config* cfg);

/* Cross-validated training on the dataset under "data". On success
 * *summary_json receives the aggregated metrics document; when "out" is
 * set the summary, per-fold records, losses, parameter snapshots, and
 * pooled curve files are written there as a side effect. */
umeml_status umeml_train(const umeml_config* cfg, char** summary_json);

/* Trains the decoder-family ablation grid (full, no_modularity, bifusion,
 * no_registers) with otherwise identical settings. *table_text receives a
 * fixed-width table, one row per variant; with "out" set each variant's
 * run is written to out/<variant>. */
umeml_status umeml_ablate(const umeml_config* cfg, char** table_text);

/* Same grid runner for the fusion baselines (concat, add, path_only,
 * gene_only). */
umeml_status umeml_baselines(const umeml_config* cfg, char** table_text);

/* Central-difference validation of every backward rule and the composed
 * per-task losses. "seeds" probe points per check (default 5). A non-empty
 * "inject" flips the named op's backward rule so the suite must fail;
 * expect UMEML_ERR_CHECK_FAILED then. *report_text receives one line per
 * check with its worst relative error. */
umeml_status umeml_gradcheck(const umeml_config* cfg, char** report_text);

/* Brute-force equivalence checks for the modularity loss and ranking
 * metrics. UMEML_ERR_CHECK_FAILED on any mismatch. */
umeml_status umeml_oracle_check(const umeml_config* cfg, char** report_text);

/* Rebuilds pooled evaluation curves from the per-fold record CSVs under
 * "results" and writes the point files under "out". *report_text lists
 * every file written; ROC lines carry the curve's trapezoid area, which
 * equals the AUC of the file's own points. */
umeml_status umeml_curves(const umeml_config* cfg, char** report_text);

/* Message for this thread's most recent failure. Valid until the next
 * failing call on the thread; never NULL. */
const char* umeml_last_error(void);

const char* umeml_version(void);

#ifdef __cplusplus
}
#endif

#endif
