use std::marker::PhantomData;
use std::ops::Range;

/// A mutable slice shared by the workers of one phase.
///
/// Callers guarantee that within a phase no index is touched by more than
/// one worker. Every accessor is bounds-checked.
pub(crate) struct SharedSlice<'a, T> {
    ptr: *mut T,
    len: usize,
    _borrow: PhantomData<&'a mut [T]>,
}

unsafe impl<T: Send> Send for SharedSlice<'_, T> {}
unsafe impl<T: Send> Sync for SharedSlice<'_, T> {}

impl<'a, T: Copy> SharedSlice<'a, T> {
    pub(crate) fn new(slice: &'a mut [T]) -> Self {
        Self {
            ptr: slice.as_mut_ptr(),
            len: slice.len(),
            _borrow: PhantomData,
        }
    }

    /// # Safety
    /// No other worker accesses index `i` during the current phase.
    #[inline]
    pub(crate) unsafe fn write(&self, i: usize, value: T) {
        assert!(i < self.len);
        self.ptr.add(i).write(value);
    }

    /// # Safety
    /// No other worker writes index `i` during the current phase.
    #[inline]
    pub(crate) unsafe fn read(&self, i: usize) -> T {
        assert!(i < self.len);
        self.ptr.add(i).read()
    }

    /// # Safety
    /// No other worker accesses any index in `range` during the current
    /// phase, and the returned slice does not outlive it.
    #[inline]
    #[allow(clippy::mut_from_ref)]
    pub(crate) unsafe fn range_mut(&self, range: Range<usize>) -> &mut [T] {
        assert!(range.start <= range.end && range.end <= self.len);
        std::slice::from_raw_parts_mut(self.ptr.add(range.start), range.end - range.start)
    }
}
