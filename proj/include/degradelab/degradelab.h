#ifndef DEGRADELAB_H
#define DEGRADELAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(DEGRADELAB_BUILDING)
#define DL_API __attribute__((visibility("default")))
#else
#define DL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  DL_OK = 0,
  DL_ERR_INVALID = 1,
  DL_ERR_IO = 2,
  DL_ERR_CONFIG = 3,
  DL_ERR_NUMERIC = 4,
  DL_ERR_RUNTIME = 5
} dl_status;

typedef struct dl_image dl_image;
typedef struct dl_image_set dl_image_set;
typedef struct dl_kernel dl_kernel;
typedef struct dl_config dl_config;
typedef struct dl_net dl_net;
typedef struct dl_func dl_func;
typedef struct dl_log dl_log;

/* Message of the last failing call on this thread; "" after success. */
DL_API const char* dl_last_error(void);
DL_API const char* dl_version(void);
DL_API const char* dl_status_name(dl_status status);

/* ---- images: 3 x H x W doubles, channel-major ---- */

/* domain: 0 = Byte [0, 255], 1 = Unit [-1, 1]. */
DL_API dl_status dl_image_create(int height, int width, int domain,
                                 dl_image** out);
DL_API dl_status dl_image_load_png(const char* path, dl_image** out);
DL_API dl_status dl_image_save_png(const dl_image* image, const char* path);
DL_API void dl_image_free(dl_image* image);
DL_API dl_status dl_image_shape(const dl_image* image, int* height,
                                int* width, int* domain);
/* Borrowed pointer to 3*H*W values, valid until the image is freed. */
DL_API double* dl_image_data(dl_image* image);
DL_API dl_status dl_image_normalize(const dl_image* byte_image,
                                    dl_image** out);
DL_API dl_status dl_image_to_byte(const dl_image* image, dl_image** out);
DL_API dl_status dl_psnr(const dl_image* a, const dl_image* b, int border,
                         double* out);

/* ---- image sets ---- */

DL_API dl_status dl_image_set_create(dl_image_set** out);
/* Loads every PNG in `dir` (sorted), normalized to Unit and cropped to a
   multiple of `multiple`. */
DL_API dl_status dl_image_set_load_dir(const char* dir, int multiple,
                                       dl_image_set** out);
/* Copies the image into the set. */
DL_API dl_status dl_image_set_push(dl_image_set* set, const dl_image* image,
                                   const char* name);
DL_API size_t dl_image_set_size(const dl_image_set* set);
/* Copies image `index` into a new handle. */
DL_API dl_status dl_image_set_get(const dl_image_set* set, size_t index,
                                  dl_image** out);
DL_API const char* dl_image_set_name(const dl_image_set* set, size_t index);
DL_API void dl_image_set_free(dl_image_set* set);
/* Procedural training textures: `hr` and `test_hr` in Unit, `lr` the 8-bit
   degraded copies of `hr`. */
DL_API dl_status dl_synthetic_data(const dl_kernel* kernel, int scale,
                                   int count, int size, int holdout,
                                   uint64_t seed, dl_image_set** hr,
                                   dl_image_set** lr, dl_image_set** test_hr);

/* ---- kernels ---- */

/* index 0 = bicubic, 1..4 = the anisotropic Gaussian benchmark set. */
DL_API dl_status dl_kernel_benchmark(int index, dl_kernel** out);
DL_API dl_status dl_kernel_gaussian(double sigma_x, double sigma_y,
                                    double theta_deg, int size,
                                    dl_kernel** out);
DL_API dl_status dl_kernel_from_taps(int size, const double* taps,
                                     dl_kernel** out);
DL_API dl_status dl_kernel_load(const char* path, dl_kernel** out);
DL_API dl_status dl_kernel_save(const dl_kernel* kernel, const char* path);
DL_API void dl_kernel_free(dl_kernel* kernel);
DL_API int dl_kernel_size(const dl_kernel* kernel);
/* Copies size*size row-major taps into `taps`. */
DL_API dl_status dl_kernel_taps(const dl_kernel* kernel, double* taps);
DL_API dl_status dl_kernel_compose_x2(const dl_kernel* kernel,
                                      dl_kernel** out);
DL_API dl_status dl_kernel_similarity(const dl_kernel* a, const dl_kernel* b,
                                      double* out);

/* ---- degradation ---- */

DL_API dl_status dl_degrade(const dl_image* image, const dl_kernel* kernel,
                            int scale, dl_image** out);
DL_API dl_status dl_synthesize_dataset(const char* hr_dir,
                                       const dl_kernel* kernel,
                                       const char* kernel_id, int scale,
                                       double split_ratio, uint64_t seed,
                                       const char* out_dir);

/* ---- configuration ---- */

/* preset: "desk" or "paper". */
DL_API dl_status dl_config_create(const char* preset, dl_config** out);
DL_API void dl_config_free(dl_config* config);
DL_API dl_status dl_config_load_file(dl_config* config, const char* path);
/* "key=value". Unknown keys fail with DL_ERR_CONFIG. */
DL_API dl_status dl_config_set(dl_config* config, const char* assignment);
/* Borrowed; valid until the next call on this config. */
DL_API const char* dl_config_get(const dl_config* config, const char* key);
DL_API dl_status dl_config_write(const dl_config* config, const char* path);
/* Validates the train.* and sr.* sections without running anything. */
DL_API dl_status dl_config_validate(const dl_config* config);
DL_API size_t dl_config_key_count(void);
DL_API dl_status dl_config_key_info(size_t index, const char** name,
                                    const char** paper_default,
                                    const char** desk_default,
                                    const char** help);

/* ---- networks and image functions ---- */

DL_API dl_status dl_net_load(const char* path, dl_net** out);
DL_API dl_status dl_net_save(const dl_net* net, const char* path);
DL_API void dl_net_free(dl_net* net);
DL_API size_t dl_net_param_count(const dl_net* net);
/* "downsampler", "discriminator" or "sr". */
DL_API const char* dl_net_role(const dl_net* net);
DL_API int dl_net_scale(const dl_net* net);

/* Image -> image maps: a network applied `times` times, or a kernel. */
DL_API dl_status dl_func_from_net(const dl_net* net, int times, dl_func** out);
DL_API dl_status dl_func_from_kernel(const dl_kernel* kernel, int scale,
                                     dl_func** out);
DL_API dl_status dl_func_bicubic(int scale, dl_func** out);
DL_API void dl_func_free(dl_func* fn);
DL_API dl_status dl_func_apply(const dl_func* fn, const dl_image* image,
                               dl_image** out);

/* Least-squares kernel of a black-box map from `n_samples` random patches.
   The result is the raw solution (sum not forced to 1). */
DL_API dl_status dl_retrieve_kernel(const dl_func* fn, const dl_image_set* hr,
                                    int patch, int n_samples, int support,
                                    int scale, uint64_t seed, size_t max_rows,
                                    dl_kernel** out);

/* ---- training ---- */

/* Called after every iteration; similarity is NaN when unknown. */
typedef void (*dl_progress_fn)(int iter, int total, double l_data,
                              double l_adv, double l_f, double similarity,
                              void* user);

/* gt_kernel and checkpoint_dir may be NULL. On success *net holds the
   downsampler and *kernel the last retrieved kernel or NULL. */
DL_API dl_status dl_train_downsampler(const dl_config* config,
                                      const dl_image_set* hr,
                                      const dl_image_set* lr,
                                      const dl_kernel* gt_kernel,
                                      const char* checkpoint_dir,
                                      dl_progress_fn progress, void* user,
                                      dl_net** net, dl_kernel** kernel,
                                      dl_log** log);
DL_API dl_status dl_train_sr(const dl_config* config,
                             const dl_func* downsampler,
                             const dl_image_set* hr, dl_progress_fn progress,
                             void* user, dl_net** net, dl_log** log);

DL_API dl_status dl_log_save_csv(const dl_log* log, const char* path);
DL_API dl_status dl_log_load_csv(const char* path, dl_log** out);
DL_API size_t dl_log_size(const dl_log* log);
/* Any output pointer may be NULL; similarity is NaN when unknown. */
DL_API dl_status dl_log_record(const dl_log* log, size_t index, int* iter,
                               double* l_data, double* l_adv, double* l_f,
                               double* similarity);
DL_API void dl_log_free(dl_log* log);

/* ---- evaluation and reports ---- */

typedef struct {
  double psnr_down;  /* NaN when no downsampler was given */
  double psnr_sr;    /* NaN when no SR map was given */
  double psnr_bicubic;
} dl_eval_mean;

/* down and sr may be NULL. border_hr < 0 uses half the kernel support.
   csv_path may be NULL. */
DL_API dl_status dl_eval(const dl_func* down, const dl_func* sr,
                         const dl_image_set* test_hr,
                         const dl_kernel* gt_kernel, int scale, int border_hr,
                         const char* csv_path, dl_eval_mean* mean);
/* Renders each log CSV into curves and summary tables under out_dir. */
DL_API dl_status dl_report(const char* const* log_paths, size_t count,
                           const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif
