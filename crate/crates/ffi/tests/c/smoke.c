#include <math.h>
#include <stdio.h>
#include <string.h>

#include "randwalk.h"

#define CHECK(call)                                                         \
  do {                                                                      \
    RwStatus s_ = (call);                                                   \
    if (s_ != RW_STATUS_OK) {                                               \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, rw_last_error());   \
      return 1;                                                             \
    }                                                                       \
  } while (0)

int main(int argc, char **argv) {
  if (argc != 2) return 2;
  RwEnsemble *ens = NULL;
  CHECK(rw_ensemble_sample(200, 10, 5.0, 0.35, 3, &ens));
  if (rw_ensemble_len(ens) != 200 || rw_ensemble_dim(ens) != 10) return 1;

  RwWalkConfig walk = rw_walk_config_default(20000, 3);
  walk.jump_probability = 0.01;
  RwCorpus *corpus = NULL;
  CHECK(rw_corpus_generate(ens, &walk, &corpus));

  RwTable *table = NULL;
  CHECK(rw_table_count(corpus, 2, &table));
  if (rw_table_cells(table) == 0) return 1;

  RwTrainConfig cfg = rw_train_config_default(RW_OBJECTIVE_SN, 10, 3);
  cfg.iterations = 5;
  RwEnsemble *trained = NULL;
  double c = NAN;
  CHECK(rw_train(table, &cfg, &trained, &c));
  if (!isfinite(c)) return 1;

  double ratio = 0.0;
  CHECK(rw_isotropy_ratio(ens, &ratio));
  if (!(ratio >= 1.0)) return 1;

  CHECK(rw_ensemble_save(trained, argv[1], c));
  RwEnsemble *loaded = NULL;
  double loaded_c = 0.0;
  CHECK(rw_ensemble_load(argv[1], &loaded, &loaded_c));
  if (loaded_c != c) return 1;

  /* Errors carry a status and a message. */
  RwTable *bad = NULL;
  if (rw_table_count(corpus, 1, &bad) != RW_STATUS_PARAMETER || bad != NULL) return 1;
  if (rw_last_error() == NULL || strlen(rw_last_error()) == 0) return 1;
  if (rw_isotropy_ratio(NULL, &ratio) != RW_STATUS_NULL_POINTER) return 1;

  rw_ensemble_free(loaded);
  rw_ensemble_free(trained);
  rw_table_free(table);
  rw_corpus_free(corpus);
  rw_ensemble_free(ens);
  rw_ensemble_free(NULL);
  printf("ok %s\n", rw_version());
  return 0;
}
