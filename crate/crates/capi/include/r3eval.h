#ifndef R3EVAL_H
#define R3EVAL_H

/* Generated by cbindgen from r3eval-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible C-ABI call.
 */
typedef enum R3Status {
  R3_STATUS_OK = 0,
  R3_STATUS_NULL_POINTER = 1,
  R3_STATUS_INVALID_ARGUMENT = 2,
  R3_STATUS_PARSE_ERROR = 3,
  R3_STATUS_IO_ERROR = 4,
  R3_STATUS_INVALID_UTF8 = 5,
  R3_STATUS_INTERNAL_ERROR = 6,
} R3Status;

/**
 * Collision-risk rank; numeric values match the metric indices.
 */
typedef enum R3RiskRank {
  R3_RISK_RANK_IMMINENT = 1,
  R3_RISK_RANK_POTENTIAL = 2,
  R3_RISK_RANK_OTHER = 3,
} R3RiskRank;

/**
 * Opaque evaluation report handle.
 */
typedef struct R3Report R3Report;

/**
 * Risk-model parameters; obtain defaults from
 * [`r3_risk_params_default`].
 */
typedef struct R3RiskParams {
  double a_max;
  double l_comp;
  double dt;
} R3RiskParams;

/**
 * Options for [`r3_evaluate_files`]. A null `sweep` selects the
 * default 0.5..0.95 sweep in 0.05 steps.
 */
typedef struct R3EvalOptions {
  struct R3RiskParams params;
  double tau_iog;
  double tau_iou;
  const double *sweep;
  size_t sweep_len;
  /**
   * Keep only Pedestrian, Cycle, Vehicle and Road Sign ground truth.
   */
  bool use_class_preset;
} R3EvalOptions;

/**
 * 2D vector (meters or m/s).
 */
typedef struct R3Vec2 {
  double x;
  double y;
} R3Vec2;

/**
 * Oriented ground-plane rectangle.
 */
typedef struct R3OrientedBox {
  struct R3Vec2 center;
  double heading;
  double length;
  double width;
} R3OrientedBox;

/**
 * Ground-plane pose, kinematics and footprint of one actor.
 */
typedef struct R3WorldState {
  struct R3Vec2 position;
  struct R3Vec2 velocity;
  double heading;
  double length;
  double width;
} R3WorldState;

/**
 * Axis-aligned image-plane rectangle in pixels.
 */
typedef struct R3ImageBox {
  double x_min;
  double y_min;
  double x_max;
  double y_max;
} R3ImageBox;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *r3_last_error_message(void);

/**
 * Default risk parameters: a_max 7.5 m/s^2, l_comp 0.1 s, dt 0.1 s.
 */
struct R3RiskParams r3_risk_params_default(void);

/**
 * Default evaluation options: default risk params, IoG/IoU thresholds
 * 0.8, default sweep, no class filter.
 */
struct R3EvalOptions r3_evaluate_options_default(void);

/**
 * Time to stop of the ego vehicle for the given velocity.
 */
enum R3Status r3_time_to_stop(struct R3Vec2 velocity, struct R3RiskParams params, double *out);

/**
 * Worst-case contact distance between two rectangular footprints.
 */
enum R3Status r3_d_crit(double length_a,
                        double width_a,
                        double length_b,
                        double width_b,
                        double *out);

/**
 * Separating-axis overlap test; touching counts as overlap.
 */
enum R3Status r3_obb_overlap(struct R3OrientedBox a, struct R3OrientedBox b, bool *out);

/**
 * Reachable set at time `t` under acceleration bound `a_max`.
 */
enum R3Status r3_existence_region(struct R3Vec2 x0,
                                  struct R3Vec2 v0,
                                  double t,
                                  double a_max,
                                  struct R3Vec2 *out_center,
                                  double *out_radius);

/**
 * Collision-risk rank of one object relative to the ego vehicle.
 */
enum R3Status r3_rank_object(struct R3WorldState ego,
                             struct R3WorldState object,
                             struct R3RiskParams params,
                             enum R3RiskRank *out);

/**
 * Intersection over ground truth (asymmetric).
 */
enum R3Status r3_iog(struct R3ImageBox gt, struct R3ImageBox pred, double *out);

/**
 * Intersection over union (symmetric).
 */
enum R3Status r3_iou(struct R3ImageBox a, struct R3ImageBox b, double *out);

/**
 * Ranks every object of a frames file and writes rank records to
 * `out_path`.
 *
 * # Safety
 * Both paths must be null-terminated strings (or null, which fails
 * with `R3_STATUS_NULL_POINTER`).
 */
enum R3Status r3_rank_frames_file(const char *frames_path,
                                  struct R3RiskParams params,
                                  const char *out_path);

/**
 * Runs the full evaluation over a frames file and a predictions file.
 * On success `*out` owns a report handle.
 *
 * # Safety
 * Paths must be null-terminated strings; `options.sweep`, when not
 * null, must point to `options.sweep_len` doubles.
 */
enum R3Status r3_evaluate_files(const char *frames_path,
                                const char *predictions_path,
                                struct R3EvalOptions options,
                                struct R3Report **out);

/**
 * Serializes a report as pretty JSON. Free the string with
 * [`r3_string_free`].
 */
enum R3Status r3_report_to_json(const struct R3Report *report, char **out);

/**
 * Serializes the sweep table as CSV. Free the string with
 * [`r3_string_free`].
 */
enum R3Status r3_report_to_csv(const struct R3Report *report, char **out);

/**
 * Releases a report handle. Null is a no-op.
 */
void r3_report_free(struct R3Report *report);

/**
 * Releases a string returned by this library. Null is a no-op.
 */
void r3_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* R3EVAL_H */
