//! Flat C boundary for foreign-language bindings.
//!
//! Matrices live in a per-thread handle table on a 1 x 1 grid; handles are
//! plain integers and must not cross threads. Entry points whose behaviour
//! depends on the element type carry a `_d` or `_i` suffix. Every function
//! returns a status code (`DISTLA_OK` on success); the message of the most
//! recent failure on the calling thread is available from
//! [`distla_last_error`].

use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::ffi::{c_char, CStr};
use std::ptr;

use crate::algorithms::{dist_gemm, dist_svd_values_vt, hermitian_eig, DEFAULT_PANEL};
use crate::dist::{axpy, dist_norm, print, DistMatrix};
use crate::error::Error;
use crate::grid::{DistScheme, Grid};
use crate::local::{LocalMatrix, NormKind, Scalar, Tag};
use crate::stats::{prcomp, PcaOptions};
use crate::transport::in_process_world;

pub type Handle = u64;

pub const DISTLA_OK: i32 = 0;
pub const DISTLA_ERR_GENERIC: i32 = 1;
pub const DISTLA_ERR_HANDLE: i32 = 2;
pub const DISTLA_ERR_DATATYPE: i32 = 3;
pub const DISTLA_ERR_SIZE: i32 = 4;
pub const DISTLA_ERR_BOUNDS: i32 = 5;
pub const DISTLA_ERR_NULL: i32 = 6;
pub const DISTLA_ERR_BUFFER: i32 = 7;
pub const DISTLA_ERR_NOT_FOUND: i32 = 8;

/// Method names understood by [`distla_lookup`], in id order.
pub const METHODS: &[&str] = &["Get", "Set", "Height", "Width", "LDim", "Empty"];

struct State {
    grid: Grid,
    next: Handle,
    objects: HashMap<Handle, DistMatrix>,
}

thread_local! {
    static STATE: RefCell<Option<State>> = const { RefCell::new(None) };
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
    static LIVE: Cell<usize> = const { Cell::new(0) };
}

struct Failure(i32, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DatatypeMismatch | Error::UnsupportedDatatype(_) | Error::UnknownTag(_) => DISTLA_ERR_DATATYPE,
            Error::SizeMismatch | Error::DimensionMismatch(_) => DISTLA_ERR_SIZE,
            Error::OutOfBounds { .. } | Error::InvalidRange(_) => DISTLA_ERR_BOUNDS,
            _ => DISTLA_ERR_GENERIC,
        };
        Failure(code, e.to_string())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn with_state<T>(f: impl FnOnce(&mut State) -> Outcome<T>) -> Outcome<T> {
    STATE.with(|s| {
        let mut slot = s.borrow_mut();
        if slot.is_none() {
            let world = in_process_world(1)?.remove(0);
            let grid = Grid::new(&world, Some(1), Some(1))?;
            *slot = Some(State {
                grid,
                next: 1,
                objects: HashMap::new(),
            });
        }
        f(slot.as_mut().expect("initialized"))
    })
}

fn finish(r: Outcome<()>) -> i32 {
    match r {
        Ok(()) => DISTLA_OK,
        Err(Failure(code, msg)) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = msg);
            code
        }
    }
}

fn lookup(st: &State, h: Handle) -> Outcome<&DistMatrix> {
    st.objects
        .get(&h)
        .ok_or_else(|| Failure(DISTLA_ERR_HANDLE, format!("invalid handle {h}")))
}

fn expect_tag(m: &DistMatrix, tag: Tag) -> Outcome<()> {
    if m.tag() == tag {
        Ok(())
    } else {
        Err(Error::DatatypeMismatch.into())
    }
}

fn insert(st: &mut State, m: DistMatrix) -> Handle {
    let h = st.next;
    st.next += 1;
    st.objects.insert(h, m);
    LIVE.with(|c| c.set(c.get() + 1));
    h
}

fn non_null<T>(p: *const T) -> Outcome<()> {
    if p.is_null() {
        Err(Failure(DISTLA_ERR_NULL, "null pointer argument".into()))
    } else {
        Ok(())
    }
}

/// Number of matrices currently alive on the calling thread.
#[no_mangle]
pub extern "C" fn distla_live_objects() -> usize {
    LIVE.with(|c| c.get())
}

/// Copies the last error message (NUL-terminated, truncated to fit) into
/// `buf` and returns its full length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn distla_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// The last error message on this thread, for Rust callers.
pub fn last_error() -> String {
    LAST_ERROR.with(|e| e.borrow().clone())
}

unsafe fn create(h: usize, w: usize, tag: Tag, out: *mut Handle) -> i32 {
    finish((|| {
        non_null(out)?;
        let handle = with_state(|st| {
            let m = DistMatrix::new(&st.grid, h, w, tag, DistScheme::McMr);
            Ok(insert(st, m))
        })?;
        *out = handle;
        Ok(())
    })())
}

/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn distla_create_d(height: usize, width: usize, out: *mut Handle) -> i32 {
    create(height, width, Tag::D, out)
}

/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn distla_create_i(height: usize, width: usize, out: *mut Handle) -> i32 {
    create(height, width, Tag::I, out)
}

#[no_mangle]
pub extern "C" fn distla_destroy(handle: Handle) -> i32 {
    finish(with_state(|st| match st.objects.remove(&handle) {
        Some(_) => {
            LIVE.with(|c| c.set(c.get() - 1));
            Ok(())
        }
        None => Err(Failure(DISTLA_ERR_HANDLE, format!("invalid handle {handle}"))),
    }))
}

/// Element type of a matrix as its suffix character (`'d'` or `'i'`).
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn distla_datatype(handle: Handle, out: *mut c_char) -> i32 {
    finish((|| {
        non_null(out)?;
        let tag = with_state(|st| Ok(lookup(st, handle)?.tag()))?;
        *out = tag.suffix().as_bytes()[0] as c_char;
        Ok(())
    })())
}

fn get(handle: Handle, i: usize, j: usize, tag: Tag) -> Outcome<Scalar> {
    with_state(|st| {
        let m = lookup(st, handle)?;
        expect_tag(m, tag)?;
        Ok(m.get_global(i, j)?)
    })
}

/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn distla_get_d(handle: Handle, i: usize, j: usize, out: *mut f64) -> i32 {
    finish((|| {
        non_null(out)?;
        *out = get(handle, i, j, Tag::D)?.as_f64();
        Ok(())
    })())
}

/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn distla_get_i(handle: Handle, i: usize, j: usize, out: *mut i64) -> i32 {
    finish((|| {
        non_null(out)?;
        if let Scalar::I(v) = get(handle, i, j, Tag::I)? {
            *out = v;
        }
        Ok(())
    })())
}

fn set(handle: Handle, i: usize, j: usize, v: Scalar) -> i32 {
    finish(with_state(|st| {
        let m = lookup(st, handle)?;
        expect_tag(m, v.tag())?;
        Ok(m.set_global(i, j, v)?)
    }))
}

#[no_mangle]
pub extern "C" fn distla_set_d(handle: Handle, i: usize, j: usize, value: f64) -> i32 {
    set(handle, i, j, Scalar::D(value))
}

#[no_mangle]
pub extern "C" fn distla_set_i(handle: Handle, i: usize, j: usize, value: i64) -> i32 {
    set(handle, i, j, Scalar::I(value))
}

/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn distla_height(handle: Handle, out: *mut usize) -> i32 {
    finish((|| {
        non_null(out)?;
        *out = with_state(|st| Ok(lookup(st, handle)?.height()))?;
        Ok(())
    })())
}

/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn distla_width(handle: Handle, out: *mut usize) -> i32 {
    finish((|| {
        non_null(out)?;
        *out = with_state(|st| Ok(lookup(st, handle)?.width()))?;
        Ok(())
    })())
}

/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn distla_ldim(handle: Handle, out: *mut usize) -> i32 {
    finish((|| {
        non_null(out)?;
        *out = with_state(|st| Ok(lookup(st, handle)?.ldim()))?;
        Ok(())
    })())
}

fn axpy_tagged(alpha: f64, x: Handle, y: Handle, tag: Tag) -> i32 {
    finish(with_state(|st| {
        let (xm, ym) = (lookup(st, x)?, lookup(st, y)?);
        expect_tag(ym, tag)?;
        Ok(axpy(alpha, xm, ym)?)
    }))
}

/// `Y <- alpha X + Y`. Datatype is checked before size.
#[no_mangle]
pub extern "C" fn distla_axpy_d(alpha: f64, x: Handle, y: Handle) -> i32 {
    axpy_tagged(alpha, x, y, Tag::D)
}

#[no_mangle]
pub extern "C" fn distla_axpy_i(alpha: i64, x: Handle, y: Handle) -> i32 {
    axpy_tagged(alpha as f64, x, y, Tag::I)
}

/// Deep copy of `src` as a new handle.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn distla_copy(src: Handle, out: *mut Handle) -> i32 {
    finish((|| {
        non_null(out)?;
        *out = with_state(|st| {
            let m = lookup(st, src)?.deep_copy()?;
            Ok(insert(st, m))
        })?;
        Ok(())
    })())
}

/// `C <- alpha A B + beta C`.
#[no_mangle]
pub extern "C" fn distla_gemm_d(alpha: f64, a: Handle, b: Handle, beta: f64, c: Handle) -> i32 {
    finish(with_state(|st| {
        let (am, bm, cm) = (lookup(st, a)?, lookup(st, b)?, lookup(st, c)?);
        Ok(dist_gemm(alpha, am, bm, beta, cm, DEFAULT_PANEL)?)
    }))
}

unsafe fn norm(handle: Handle, kind: NormKind, tag: Tag, out: *mut f64) -> i32 {
    finish((|| {
        non_null(out)?;
        *out = with_state(|st| {
            let m = lookup(st, handle)?;
            expect_tag(m, tag)?;
            Ok(dist_norm(kind, m)?)
        })?;
        Ok(())
    })())
}

/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn distla_maxnorm_d(handle: Handle, out: *mut f64) -> i32 {
    norm(handle, NormKind::Max, Tag::D, out)
}

/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn distla_maxnorm_i(handle: Handle, out: *mut f64) -> i32 {
    norm(handle, NormKind::Max, Tag::I, out)
}

/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn distla_frobenius_d(handle: Handle, out: *mut f64) -> i32 {
    norm(handle, NormKind::Frobenius, Tag::D, out)
}

/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn distla_frobenius_i(handle: Handle, out: *mut f64) -> i32 {
    norm(handle, NormKind::Frobenius, Tag::I, out)
}

fn new_from_local(st: &mut State, m: &LocalMatrix) -> Handle {
    let d = DistMatrix::from_global(&st.grid, m, DistScheme::McMr);
    insert(st, d)
}

/// Singular values (descending, `width` of them) into `sigma`, and the
/// right singular vectors as a new `width x width` matrix.
///
/// # Safety
/// `sigma` must be valid for `width` writes and `v_out` for one.
#[no_mangle]
pub unsafe extern "C" fn distla_svd_d(handle: Handle, sigma: *mut f64, v_out: *mut Handle) -> i32 {
    finish((|| {
        non_null(sigma)?;
        non_null(v_out)?;
        let (s, v) = with_state(|st| {
            let svd = dist_svd_values_vt(lookup(st, handle)?)?;
            let v = new_from_local(st, &svd.v);
            Ok((svd.sigma, v))
        })?;
        ptr::copy_nonoverlapping(s.as_ptr(), sigma, s.len());
        *v_out = v;
        Ok(())
    })())
}

/// Eigenvalues (ascending) into `w` and eigenvectors as a new matrix.
/// The lower triangle of the input is used.
///
/// # Safety
/// `w` must be valid for `n` writes and `x_out` for one.
#[no_mangle]
pub unsafe extern "C" fn distla_eig_d(handle: Handle, w: *mut f64, x_out: *mut Handle) -> i32 {
    finish((|| {
        non_null(w)?;
        non_null(x_out)?;
        let (vals, x) = with_state(|st| {
            let e = hermitian_eig(lookup(st, handle)?)?;
            let x = new_from_local(st, &e.vectors.local_matrix());
            Ok((e.values, x))
        })?;
        ptr::copy_nonoverlapping(vals.as_ptr(), w, vals.len());
        *x_out = x;
        Ok(())
    })())
}

/// Principal components. Writes `width` standard deviations to `sdev`, the
/// rotation as a new handle, and, when `center` is non-zero, the `width`
/// column means to `center_out`.
///
/// # Safety
/// `sdev` must be valid for `width` writes, `rotation_out` for one, and
/// `center_out` for `width` writes when centering.
#[no_mangle]
pub unsafe extern "C" fn distla_prcomp_d(
    handle: Handle,
    center: i32,
    scale: i32,
    sdev: *mut f64,
    rotation_out: *mut Handle,
    center_out: *mut f64,
) -> i32 {
    finish((|| {
        non_null(sdev)?;
        non_null(rotation_out)?;
        if center != 0 {
            non_null(center_out)?;
        }
        let opts = PcaOptions {
            center: center != 0,
            scale: scale != 0,
            ..PcaOptions::default()
        };
        let (res, rot) = with_state(|st| {
            let res = prcomp(lookup(st, handle)?, opts)?;
            let rot = new_from_local(st, &res.rotation);
            Ok((res, rot))
        })?;
        ptr::copy_nonoverlapping(res.sdev.as_ptr(), sdev, res.sdev.len());
        if center != 0 {
            ptr::copy_nonoverlapping(res.center.as_ptr(), center_out, res.center.len());
        }
        *rotation_out = rot;
        Ok(())
    })())
}

unsafe fn print_tagged(handle: Handle, tag: Tag, buf: *mut c_char, cap: usize, len_out: *mut usize) -> i32 {
    finish((|| {
        non_null(len_out)?;
        let mut text = Vec::new();
        with_state(|st| {
            let m = lookup(st, handle)?;
            expect_tag(m, tag)?;
            Ok(print(m, &mut text)?)
        })?;
        *len_out = text.len();
        if text.len() > cap || (buf.is_null() && !text.is_empty()) {
            return Err(Failure(
                DISTLA_ERR_BUFFER,
                format!("print needs {} bytes, buffer holds {cap}", text.len()),
            ));
        }
        ptr::copy_nonoverlapping(text.as_ptr() as *const c_char, buf, text.len());
        Ok(())
    })())
}

/// Writes the printed form of a matrix into `buf` (not NUL-terminated) and
/// its length into `len_out`. If `cap` is too small nothing is copied,
/// `len_out` still receives the required size and `DISTLA_ERR_BUFFER` is
/// returned.
///
/// # Safety
/// `buf` must be valid for `cap` bytes of writes, `len_out` for one write.
#[no_mangle]
pub unsafe extern "C" fn distla_print_d(handle: Handle, buf: *mut c_char, cap: usize, len_out: *mut usize) -> i32 {
    print_tagged(handle, Tag::D, buf, cap, len_out)
}

/// # Safety
/// As for [`distla_print_d`].
#[no_mangle]
pub unsafe extern "C" fn distla_print_i(handle: Handle, buf: *mut c_char, cap: usize, len_out: *mut usize) -> i32 {
    print_tagged(handle, Tag::I, buf, cap, len_out)
}

/// Exact-name method lookup. Returns the method id, or -1 with the last
/// error set to `function <name> not found`.
///
/// # Safety
/// `name` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn distla_lookup(name: *const c_char) -> i32 {
    if name.is_null() {
        finish(Err(Failure(DISTLA_ERR_NULL, "null pointer argument".into())));
        return -1;
    }
    let name = CStr::from_ptr(name).to_string_lossy();
    match METHODS.iter().position(|m| *m == name) {
        Some(id) => id as i32,
        None => {
            finish(Err(Failure(DISTLA_ERR_NOT_FOUND, format!("function {name} not found"))));
            -1
        }
    }
}
