// Copyright 2026 The MoveTok Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MOVETOK_MOVETOK_H_
#define MOVETOK_MOVETOK_H_

#include <stddef.h>
#include <stdint.h>

#if defined(MOVETOK_BUILDING)
#define MT_API __attribute__((visibility("default")))
#else
#define MT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mt_status {
  MT_OK = 0,
  MT_ERR_USAGE = 1,
  MT_ERR_DATA = 2,
  MT_ERR_NUMERIC = 3,
  MT_ERR_IO = 4,
  MT_ERR_INTERNAL = 5
} mt_status;

typedef struct mt_codebook mt_codebook;

/* Library version string, e.g. "0.1.0". */
MT_API const char* mt_version(void);

/* Message of the last failed call on this thread; empty after success. */
MT_API const char* mt_last_error(void);

/* Releases strings returned through char** out-parameters. */
MT_API void mt_string_free(char* s);

MT_API mt_status mt_codebook_load(const char* path, mt_codebook** out);
MT_API void mt_codebook_free(mt_codebook* cb);
MT_API mt_status mt_codebook_info(const mt_codebook* cb, size_t* n_layers, size_t* codebook_size,
                                  size_t* input_dim);

/* Writes n_layers codeword indices for one vector of length dim. */
MT_API mt_status mt_encode(const mt_codebook* cb, const double* vector, size_t dim, int32_t* indices);

/* Row-major batch; indices receives count * n_layers values. */
MT_API mt_status mt_encode_batch(const mt_codebook* cb, const double* vectors, size_t count, size_t dim,
                                 int32_t* indices);

MT_API mt_status mt_tvd(const double* p, const double* q, size_t n, double* out);
MT_API mt_status mt_kl(const double* p, const double* q, size_t n, double* out);
MT_API mt_status mt_jsd(const double* p, const double* q, size_t n, double* out);

/* smoothing: 0 none, 1 epsilon. */
MT_API mt_status mt_bleu(const char* const* candidate, size_t candidate_len, const char* const* reference,
                         size_t reference_len, int max_n, int smoothing, double epsilon, double* out);

/* rankings_json: array of label arrays; truths_json: array of labels. */
MT_API mt_status mt_hit_rate(const char* rankings_json, const char* truths_json, int k, double* out);

/* Trajectories are single JSON records in the trajectory file format.
 * periods_json may be NULL for the standard four periods. */
MT_API mt_status mt_features(const char* trajectory_json, const char* periods_json, char** features_json);
MT_API mt_status mt_reward(const char* generated_json, const char* truth_json, const char* periods_json,
                           char** reward_json);
MT_API mt_status mt_group_advantages(const double* rewards, size_t n, double* advantages);

/* Runs a pipeline command with a flat JSON options object. */
MT_API mt_status mt_run_command(const char* command, const char* options_json, char** report_json);
MT_API mt_status mt_command_defaults(const char* command, char** defaults_json);
/* JSON array of {name, summary}. */
MT_API mt_status mt_command_list(char** list_json);

#ifdef __cplusplus
}
#endif

#endif  // MOVETOK_MOVETOK_H_
