//! The flat, handle-based boundary used by foreign-language bindings.

use std::ffi::{c_char, CString};

use distla::capi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 128];
    let n = unsafe { distla_last_error(buf.as_mut_ptr(), buf.len()) };
    buf[..n].iter().map(|&c| c as u8 as char).collect()
}

fn main() {
    let (mut a, mut b, mut k) = (0, 0, 0);
    unsafe {
        distla_create_d(2, 2, &mut a);
        distla_create_d(2, 2, &mut b);
        distla_create_i(2, 2, &mut k);
    }
    distla_set_d(a, 0, 0, 1.5);
    distla_set_d(a, 1, 1, -2.0);
    distla_set_d(b, 0, 1, 4.0);
    distla_axpy_d(2.0, a, b);

    let mut len = 0;
    unsafe { distla_print_d(b, std::ptr::null_mut(), 0, &mut len) };
    let mut buf = vec![0 as c_char; len];
    unsafe { distla_print_d(b, buf.as_mut_ptr(), len, &mut len) };
    print!("{}", buf.iter().map(|&c| c as u8 as char).collect::<String>());

    let status = distla_axpy_d(1.0, k, b);
    println!("mixed axpy -> status {status}: {}", last_error());
    let name = CString::new("Transpose").unwrap();
    let id = unsafe { distla_lookup(name.as_ptr()) };
    println!("lookup Transpose -> {id}: {}", last_error());

    println!("live matrices: {}", distla_live_objects());
    for h in [a, b, k] {
        distla_destroy(h);
    }
    println!("live matrices after destroy: {}", distla_live_objects());
}
